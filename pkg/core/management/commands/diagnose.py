from pathlib import Path

from core.services.pipeline import run_diagnose

from ._base import PackingCommand


class Command(PackingCommand):
    help = 'Recompute KGS, density and interface layer for an existing particle CSV'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--particles',
            type=str,
            help='Particle CSV to diagnose (default: <output directory>/particles.csv)',
        )

    def process(self, options):
        config = self.load_run_config(options)
        particles = Path(options['particles']) if options.get('particles') else config.output_directory / 'particles.csv'
        outcome = run_diagnose(config, particles)
        for body_id, values in outcome.report.summary().items():
            self.report(
                f"{body_id}: mean |KGS|dx {values['mean_kgs']:.3e}, "
                f"interface |KGS|dx {values['interface_kgs']:.3e}, "
                f"density {values['density_min']:.4g}..{values['density_max']:.4g}"
            )
        self.report_paths(outcome.paths)
