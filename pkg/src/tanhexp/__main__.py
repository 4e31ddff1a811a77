import sys

from tanhexp.cli import main

sys.exit(main())
