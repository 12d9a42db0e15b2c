"""
Shared plumbing for the packing commands.

Status messages go to stderr; data only goes to files. Every PackingError
becomes a CommandError with exit code 1.
"""

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PackingError
from core.services.run_config import RunConfig, load_config

EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2


class PackingCommand(BaseCommand):
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            type=str,
            help='Path to the run configuration file',
        )

    def handle(self, *args, **options):
        try:
            self.process(options)
        except PackingError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID) from exc

    def process(self, options):
        raise NotImplementedError

    def load_run_config(self, options) -> RunConfig:
        path = options.get('config')
        if not path:
            raise CommandError('--config is required', returncode=EXIT_INVALID)
        return load_config(Path(path))

    def report(self, message: str):
        self.stderr.write(message, style_func=self.style.SUCCESS)

    def report_paths(self, paths):
        for path in paths:
            self.stderr.write(f'  {path}')
