import sys

from mbroute.cli import main

sys.exit(main())
