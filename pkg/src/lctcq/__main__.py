import sys

from lctcq.cli import main

sys.exit(main())
