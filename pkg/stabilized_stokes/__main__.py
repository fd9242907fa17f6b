import sys

from stabilized_stokes.cli import main

if __name__ == "__main__":
    sys.exit(main())
