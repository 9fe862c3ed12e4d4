import sys

from localoco.cli import main

sys.exit(main())
