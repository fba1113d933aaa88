"""Plugin that fails with the exit code given in its manifest argv."""
import sys

print("deliberate failure", file=sys.stderr)
sys.exit(int(sys.argv[1]))
