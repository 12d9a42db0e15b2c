"""
Command-line entry point: ``python -m core <subcommand> [--config PATH]``.

Dispatches straight to the app's management commands and returns their
exit code instead of exiting.
"""

import os
import sys
from typing import List, Optional

import django
from django.core.management import load_command_class
from django.core.management.base import CommandError

PROG = 'sph-packing'
SUBCOMMANDS = ('seed', 'relax', 'diagnose', 'version')
USAGE = f"usage: {PROG} {{{','.join(SUBCOMMANDS)}}} [--config PATH]\n"


def cli_main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sph_packing.settings')
    django.setup()

    if not argv or argv[0] not in SUBCOMMANDS:
        sys.stderr.write(USAGE)
        if argv:
            sys.stderr.write(f"{PROG}: unknown subcommand '{argv[0]}'\n")
        return 1

    command = load_command_class('core', argv[0])
    # Not flagged as a command-line run, so usage errors raise CommandError (exit 1)
    parser = command.create_parser(PROG, argv[0])
    try:
        options = vars(parser.parse_args(argv[1:]))
        args = options.pop('args', ())
        command.execute(*args, **options)
    except CommandError as exc:
        sys.stderr.write(f'{PROG}: {exc}\n')
        return exc.returncode
    except SystemExit as exc:
        # --help
        return 0 if exc.code in (None, 0) else 1
    return 0
