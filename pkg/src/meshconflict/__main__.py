# -*- coding: utf-8 -*-

from meshconflict.cli import main

main(prog_name="meshconflict")
