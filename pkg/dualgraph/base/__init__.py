from .command import BaseCommand
