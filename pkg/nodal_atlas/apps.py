from django.apps import AppConfig
import os

from . import conf


class NodalAtlasConfig(AppConfig):
    name = 'nodal_atlas'
    verbose_name = "nodal_atlas"
    default_auto_field = 'django.db.models.BigAutoField'

    def ready(self):
        output_root = conf.get('OUTPUT_ROOT')
        if not os.path.isdir(output_root):
            os.makedirs(output_root, exist_ok=True)
