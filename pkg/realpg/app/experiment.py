# =============================================================================
# IMPORTS
# =============================================================================
import abc
import logging

from .. import infer
from .train import train_run

logger = logging.getLogger(__name__)

__all__ = ["Experiment", "Train", "Test", "TrainAndTest"]


# =============================================================================
# MODULE CLASSES
# =============================================================================
class Experiment(abc.ABC):
    """ Base class for realpg experiment. """

    def __init__(self):
        super(Experiment, self).__init__()


class Train(Experiment):
    """Training experiment.

    Parameters
    ----------
    config : `realpg.config.RunConfig`

    data : `realpg.data.JudgeDataset`
        Training prompts.

    data_te : `realpg.data.JudgeDataset`, optional
        Held-out prompts for the evaluation curve.

    Methods
    -------
    train : Run every training step and keep the result.

    """

    def __init__(self, config, data, data_te=None, params=None):
        super(Train, self).__init__()
        self.config = config
        self.data = data
        self.data_te = data_te
        self.params = params
        self.result = None

    def train(self):
        self.result = train_run(self.config, self.data, test_dataset=self.data_te, params=self.params)
        self.params = self.result.checkpoint.params
        return self.params


class Test(Experiment):
    """Test experiment.

    Parameters
    ----------
    config : `realpg.config.RunConfig`

    params : `torch.Tensor`

    data : `realpg.data.JudgeDataset`

    modes : `List` of `str`, optional
        Inference modes to report; defaults to `config.infer.report_modes`.

    """

    def __init__(self, config, params, data, modes=None):
        super(Test, self).__init__()
        self.config = config
        self.params = params
        self.data = data
        self.modes = list(modes) if modes is not None else list(config.infer.report_modes)

    def test(self):
        """ Run tests. """
        infer_config = self.config.infer
        results = {}
        predictions = {}
        for mode in self.modes:
            n = infer_config.n if mode == "rail_avg_n" else 1
            predictions[mode] = infer.predict(
                self.params, self.data, self.config.policy, mode, n=n, seed=infer_config.seed
            )
            results[mode] = infer.score(
                predictions[mode], self.data, self.config.policy, self.config.metrics.tau_variant
            )
            logger.info("%s: r=%.4f rmse=%.4f", mode, results[mode].r, results[mode].rmse)

        self.predictions = predictions
        self.results = results
        return results


class TrainAndTest(Experiment):
    """ Train a policy and then test it. """

    def __init__(self, config, ds_tr, ds_te, params=None):
        super(TrainAndTest, self).__init__()
        self.config = config
        self.ds_tr = ds_tr
        self.ds_te = ds_te
        self.params = params

    def run(self):
        """Run train and test."""
        train = Train(self.config, self.ds_tr, data_te=self.ds_te, params=self.params)
        train.train()
        self.result = train.result

        test = Test(self.config, train.params, self.ds_te)
        self.results_te = test.test()
        self.predictions_te = test.predictions

        return {"test": self.results_te}
