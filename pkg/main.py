import sys

from dualcam.Project.cli import main

if __name__ == "__main__":
    sys.exit(main())
