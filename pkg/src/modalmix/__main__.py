import sys

from modalmix.cli import main

sys.exit(main())
