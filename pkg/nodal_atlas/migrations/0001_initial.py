# Generated by Django 5.2.8 on 2026-10-19 15:30

import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("task", models.CharField(max_length=40)),
                ("config", models.JSONField(blank=True, default=dict)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("running", "Running"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                        ],
                        default="running",
                        max_length=20,
                    ),
                ),
                ("exit_code", models.IntegerField(blank=True, null=True)),
                ("summary", models.JSONField(blank=True, default=dict)),
                ("output_dir", models.CharField(blank=True, max_length=512)),
                (
                    "started",
                    models.DateTimeField(default=django.utils.timezone.now),
                ),
                ("finished", models.DateTimeField(blank=True, null=True)),
            ],
            options={
                "ordering": ["-started"],
            },
        ),
    ]
