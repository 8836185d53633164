from . import checkpoint, cli, experiment, report, train
