import sys

from hosf.cli import main

sys.exit(main())
