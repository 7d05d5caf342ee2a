import sys

from ksrand.cli import main

sys.exit(main())
