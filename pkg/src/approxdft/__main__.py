import sys

from approxdft.cli import main

sys.exit(main())
