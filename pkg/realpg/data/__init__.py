""" Judge environments and datasets. """
from . import dataset, env
from .dataset import JudgeDataset
from .env import JudgeExample, make_dataset, posterior_mean
