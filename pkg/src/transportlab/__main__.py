"""python -m transportlab defers to the command line front end."""

from transportlab.cli import entry

entry()
