from core.services.pipeline import run_seed

from ._base import PackingCommand


class Command(PackingCommand):
    help = 'Seed lattice particles inside every body of a run configuration'

    def process(self, options):
        config = self.load_run_config(options)
        outcome = run_seed(config)
        counts = ', '.join(f'{b.body_id}={b.particles.count}' for b in outcome.system.bodies)
        self.report(f'Seeded {counts}')
        self.report_paths(outcome.paths)
