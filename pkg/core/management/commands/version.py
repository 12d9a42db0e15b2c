from django.core.management.base import BaseCommand

import sph_packing


class Command(BaseCommand):
    help = 'Print the toolkit version'
    requires_system_checks = []

    def handle(self, *args, **options):
        self.stdout.write(f'sph-packing {sph_packing.__version__}')
