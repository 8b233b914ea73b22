"""Error norms, convergence and validation studies, and field export."""
from .export import export_csv, export_vtk, read_csv, read_vtk
from .manufactured import ManufacturedCase, manufactured_case
from .norms import ErrorReport, e_inf, error_norms, error_vs_exact, format_table, order_table

__all__ = ["ErrorReport", "ManufacturedCase", "e_inf", "error_norms", "error_vs_exact",
           "export_csv", "export_vtk", "format_table", "manufactured_case", "order_table",
           "read_csv", "read_vtk"]
