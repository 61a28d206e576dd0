import sys

from cyclefree.cli import main

sys.exit(main())
