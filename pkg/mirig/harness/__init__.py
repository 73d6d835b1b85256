from mirig.harness.cells import run_cells as run_cells
from mirig.harness.plots import render_figures as render_figures
from mirig.harness.provenance import collect_provenance as collect_provenance
from mirig.harness.report import (
    CorrelationRow as CorrelationRow,
    Provenance as Provenance,
    RunReport as RunReport,
    RunRow as RunRow,
    bound_failures as bound_failures,
    emit_report as emit_report,
    read_results_csv as read_results_csv,
    write_results_csv as write_results_csv,
)
from mirig.harness.scenarios import (
    SCENARIOS as SCENARIOS,
    load_dataset as load_dataset,
    peak_table as peak_table,
    run_case_batch_size as run_case_batch_size,
    run_case_infomin as run_case_infomin,
    run_negative_sampling as run_negative_sampling,
    run_task_grid as run_task_grid,
    run_temperature_sweep as run_temperature_sweep,
)
