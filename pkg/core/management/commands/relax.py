from django.core.management.base import CommandError

from core.services.pipeline import run_relax

from ._base import EXIT_NOT_CONVERGED, PackingCommand


class Command(PackingCommand):
    help = 'Seed, relax and diagnose the particle distribution of a run configuration'

    def process(self, options):
        config = self.load_run_config(options)
        outcome = run_relax(config)
        result = outcome.result
        summary = outcome.report.summary()[result.outer_id]

        self.report(
            f'{config.mode} relaxation: {result.steps} steps, '
            f'terminal normalized energy {result.history.terminal:.3e}, '
            f"interface |KGS|dx {summary['interface_kgs']:.3e}"
        )
        self.report_paths(outcome.paths)
        if not result.converged:
            raise CommandError(
                f'relaxation did not converge within {config.max_steps} steps; outputs were written',
                returncode=EXIT_NOT_CONVERGED,
            )
