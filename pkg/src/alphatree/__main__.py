import sys

from alphatree.cli import main

sys.exit(main())
