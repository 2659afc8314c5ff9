from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    """One invocation of the nodal_atlas command, stored when --record is given."""

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    task = models.CharField(max_length=40)
    config = models.JSONField(default=dict, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')
    exit_code = models.IntegerField(null=True, blank=True)

    # Results
    summary = models.JSONField(default=dict, blank=True)
    output_dir = models.CharField(max_length=512, blank=True)

    started = models.DateTimeField(default=timezone.now)
    finished = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-started']

    def __str__(self):
        return f"{self.task} ({self.status})"

    @property
    def duration_seconds(self):
        """Wall time of the run, None while it is running."""
        if self.finished is None:
            return None
        return (self.finished - self.started).total_seconds()

    @property
    def succeeded(self):
        return self.status == 'completed' and self.exit_code == 0
