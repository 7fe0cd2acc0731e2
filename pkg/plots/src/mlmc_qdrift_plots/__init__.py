"""CSV-driven figure rendering for mlmc-qdrift outputs."""

from .render import SchemaError, render_all, render_fig1, render_fig2, render_fig3

__all__ = ["SchemaError", "render_all", "render_fig1", "render_fig2", "render_fig3"]
