import sys

from diskturing.cli import main

sys.exit(main())
