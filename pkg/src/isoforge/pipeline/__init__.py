"""Recipe DAGs, their executor, and the exchange file formats."""

from .execute import ExecutionResult, NodeError, clear_cache, execute
from .io import read_any, read_state, read_subspace, write_report, write_state, write_subspace
from .recipe import Diagnostic, RecipeError, RecipeGraph, load_recipe, parse_recipe
