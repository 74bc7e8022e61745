"""Allow ``python -m teamdyn``."""

from teamdyn.cli import main

main()
