"""Bayesian mixed-effects mean and quantile regression for balanced panels."""

from ._core import (
    ChainResult,
    FitReport,
    PanelDataset,
    PriorSpec,
    RunConfig,
    SpdMatrix,
    SummaryRow,
    TruthSpec,
    al_log_density,
    al_params,
    check_loss,
    cond_loglik_mean,
    cond_loglik_quant,
    fit_report,
    gen_mean_panel,
    gen_quant_panel,
    grid_posterior_oracle,
    ihs,
    read_chain,
    run_cli,
    run_mean_gibbs,
    run_quantile_gibbs,
    summarize,
    summary_series,
    write_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ChainResult",
    "FitReport",
    "PanelDataset",
    "PriorSpec",
    "RunConfig",
    "SpdMatrix",
    "SummaryRow",
    "TruthSpec",
    "al_log_density",
    "al_params",
    "check_loss",
    "cond_loglik_mean",
    "cond_loglik_quant",
    "fit_report",
    "gen_mean_panel",
    "gen_quant_panel",
    "grid_posterior_oracle",
    "ihs",
    "read_chain",
    "run_cli",
    "run_mean_gibbs",
    "run_quantile_gibbs",
    "summarize",
    "summary_series",
    "write_chain",
]


def main() -> int:
    """Console entry point mirroring the native CLI."""
    import sys

    code, out, err = run_cli(sys.argv[1:])
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code
