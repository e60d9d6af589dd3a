def pytest_addoption(parser):
    parser.addoption(
        "--num_seeds", type=int, default=3, help="number of seeds for the ablation run"
    )
    parser.addoption(
        "--overfit_epochs", type=int, default=300, help="epochs for the two-case overfit run"
    )
    parser.addoption("--batch_size", type=int, default=2, help="cases per batch")


def pytest_generate_tests(metafunc):
    if "num_seeds" in metafunc.fixturenames:
        metafunc.parametrize("num_seeds", [metafunc.config.getoption("--num_seeds")])
    if "overfit_epochs" in metafunc.fixturenames:
        metafunc.parametrize(
            "overfit_epochs", [metafunc.config.getoption("--overfit_epochs")]
        )
    if "batch_size" in metafunc.fixturenames:
        metafunc.parametrize("batch_size", [metafunc.config.getoption("--batch_size")])
