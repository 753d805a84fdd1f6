import pytest

from convrec.embeddings import TrainingConfig, train
from convrec.synthetic import make_corpus, write_corpus


@pytest.fixture(scope="session")
def planted():
    """The standard planted-cluster corpus: 5 clusters, 60 items, 200 users."""
    return make_corpus(seed=7)


@pytest.fixture(scope="session")
def tiny():
    """Small corpus for gradient checks and fast unit tests."""
    return make_corpus(
        n_clusters=2, items_per_cluster=5, n_users=6, n_conversations=4,
        seq_len_range=(4, 6), seed=3,
    )


@pytest.fixture(scope="session")
def planted_files(planted, tmp_path_factory):
    outdir = tmp_path_factory.mktemp("corpus")
    return write_corpus(planted, outdir)


@pytest.fixture(scope="session")
def item2vec_model(planted):
    config = TrainingConfig(
        backbone="item2vec", dim=16, epochs=8, learning_rate=0.05, seed=11
    )
    return train(planted.sequences, planted.catalog.item_ids(), config)


@pytest.fixture(scope="session")
def sasmini_model(planted):
    config = TrainingConfig(
        backbone="sasmini", dim=16, epochs=12, learning_rate=0.05,
        max_seq_len=20, seed=11,
    )
    return train(planted.sequences, planted.catalog.item_ids(), config)
