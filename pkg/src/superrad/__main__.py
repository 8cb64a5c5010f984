import sys

from superrad.cli import main

sys.exit(main())
