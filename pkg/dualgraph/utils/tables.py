from tabulate import tabulate


def metrics_table(metrics) -> str:
    rows = [
        [name, c.rmse, c.rmse_phys, c.unit, c.r2]
        for name, c in metrics.channels().items()
    ]
    return tabulate(
        rows,
        headers=["output", "RMSE (norm)", "RMSE (phys)", "unit", "R^2"],
        tablefmt="grid",
        floatfmt=".6g",
    )


def ablation_table(summary) -> str:
    rows = [
        [
            r.seed,
            r.kind.value,
            r.stress_rmse_phys,
            r.peeq_rmse_phys,
            r.stress_rmse,
            r.peeq_rmse,
            r.parameters,
        ]
        for r in summary.rows
    ]
    table = tabulate(
        rows,
        headers=[
            "seed",
            "model",
            "stress RMSE [MPa]",
            "PEEQ RMSE",
            "stress RMSE (norm)",
            "PEEQ RMSE (norm)",
            "params",
        ],
        tablefmt="grid",
        floatfmt=".6g",
    )
    footer = tabulate(
        [["median reduction", f"{summary.stress_reduction_pct:.2f}%", f"{summary.peeq_reduction_pct:.2f}%"]],
        headers=["", "stress", "PEEQ"],
        tablefmt="grid",
    )
    return f"{table}\n{footer}"


def dict_table(data: dict, headers=("key", "value")) -> str:
    return tabulate([[k, v] for k, v in data.items()], headers=list(headers), tablefmt="grid")

