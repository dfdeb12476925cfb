import numpy as np
import pytest

import millsense as ms


def target_vector(ds: ms.Dataset, name: str) -> np.ndarray:
    return np.array([r.targets[name] for r in ds.records], dtype=float)


@pytest.fixture(scope="session")
def synth_small() -> ms.Dataset:
    """Quick PURE_NOISE dataset for structural tests."""
    return ms.generate(ms.SynthConfig(n_experiments=60, seed=3))


@pytest.fixture(scope="session")
def synth500() -> ms.Dataset:
    """The canonical evaluation dataset: PURE_NOISE, n=500, seed 0, default noise."""
    return ms.generate(ms.SynthConfig(n_experiments=500, seed=0))


@pytest.fixture(scope="session")
def split500(synth500):
    return ms.split_train_test(synth500, 0.2, 0)


@pytest.fixture(scope="session")
def feats500(split500):
    train, test = split500
    X_train, names = ms.featurize_dataset(train)
    X_test, _ = ms.featurize_dataset(test)
    return X_train, X_test, tuple(names)


@pytest.fixture(scope="session")
def model_rdq(split500, feats500) -> ms.Forest:
    train, _ = split500
    X_train, _, names = feats500
    return ms.fit(
        X_train,
        target_vector(train, "Rdqmaxmean"),
        ms.HyperParams(seed=0),
        feature_names=names,
        target="Rdqmaxmean",
    )


@pytest.fixture(scope="session")
def noiseless_purenoise500() -> ms.Dataset:
    """noise_sd=0 PURE_NOISE dataset: Fz features are exactly constant."""
    return ms.generate(ms.SynthConfig(n_experiments=500, seed=0, noise_sd=0.0))
