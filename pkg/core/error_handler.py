"""
Error Handler - Centralized error handling with user-friendly messages
Renders CLI error panels using Rich
"""

import traceback

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .exceptions import (
    DPMixError,
    ConfigurationError,
    DivergenceError,
    ErrorCategory,
    ErrorSeverity,
)

console = Console(stderr=True)

_SEVERITY_COLORS = {
    ErrorSeverity.LOW: "blue",
    ErrorSeverity.MEDIUM: "yellow",
    ErrorSeverity.HIGH: "red",
    ErrorSeverity.CRITICAL: "red",
}

_CATEGORY_TITLES = {
    ErrorCategory.CONFIGURATION: "Configuration Error",
    ErrorCategory.VALIDATION: "Validation Error",
    ErrorCategory.TOPOLOGY: "Topology Error",
    ErrorCategory.DATA: "Data Error",
    ErrorCategory.OPTIMIZATION: "Optimization Error",
    ErrorCategory.PRIVACY: "Privacy Error",
    ErrorCategory.REPORTING: "Report Error",
    ErrorCategory.SYSTEM: "Error",
}


class ErrorHandler:
    """
    Centralized error handling
    Converts technical errors into readable panels
    """

    @staticmethod
    def handle_exception(e: BaseException, verbose: bool = False) -> None:
        """
        Handle exception and display user-friendly message

        Args:
            e: Exception to handle
            verbose: Show detailed information
        """
        if isinstance(e, KeyboardInterrupt):
            console.print("\n[yellow]Run interrupted by user[/yellow]")
            return

        if isinstance(e, ConfigurationError):
            ErrorHandler._handle_config_error(e, verbose)
        elif isinstance(e, DivergenceError):
            ErrorHandler._handle_divergence_error(e, verbose)
        elif isinstance(e, DPMixError):
            ErrorHandler._handle_generic_error(e, verbose)
        else:
            ErrorHandler._handle_unknown_error(e, verbose)

    @staticmethod
    def _handle_config_error(e: ConfigurationError, verbose: bool) -> None:
        """Configuration errors list every offending key"""
        content = [
            "[bold red]Configuration Error[/bold red]\n",
            f"[white]{e.message}[/white]\n",
        ]

        for error in e.details.get('errors', []):
            content.append(f"  • [cyan]{error}[/cyan]")
        for key, value in e.details.items():
            if key != 'errors':
                content.append(f"  • {key}: [cyan]{value}[/cyan]")

        if e.suggestion:
            content.append("\n[yellow]Suggestion:[/yellow]")
            content.append(f"   {e.suggestion}")

        console.print(Panel(
            "\n".join(content),
            title="[red]Error[/red]",
            border_style="red",
            expand=False
        ))

        if verbose and e.original_error:
            console.print(f"\n[dim]Original error: {e.original_error}[/dim]")

    @staticmethod
    def _handle_divergence_error(e: DivergenceError, verbose: bool) -> None:
        """Divergence errors name the iteration and agent"""
        content = [
            "[bold red]Run diverged[/bold red]\n",
            f"[white]{e.message}[/white]\n",
            f"[dim]Iteration:[/dim] [cyan]{e.details.get('iteration', '?')}[/cyan]",
            f"[dim]Agent:[/dim] [cyan]{e.details.get('agent', '?')}[/cyan]",
        ]
        for key in ('method', 'seed', 'm', 'p', 'theta', 'gamma'):
            if key in e.details:
                content.append(f"[dim]{key}:[/dim] [cyan]{e.details[key]}[/cyan]")

        if e.suggestion:
            content.append("\n[yellow]Suggestion:[/yellow]")
            content.append(f"   {e.suggestion}")

        console.print(Panel(
            "\n".join(content),
            title="[red]Optimization Error[/red]",
            border_style="red",
            expand=False
        ))

    @staticmethod
    def _handle_generic_error(e: DPMixError, verbose: bool) -> None:
        """Handle any other dpmixsgd error"""
        color = _SEVERITY_COLORS.get(e.severity, "red")
        title = _CATEGORY_TITLES.get(e.category, "Error")

        content = [
            f"[bold {color}]{e.__class__.__name__}[/bold {color}]\n",
            f"[white]{e.message}[/white]\n"
        ]

        if e.details:
            content.append("[dim]Details:[/dim]")
            for key, value in e.details.items():
                content.append(f"  • {key}: [cyan]{value}[/cyan]")
            content.append("")

        if e.suggestion:
            content.append("[yellow]Suggestion:[/yellow]")
            content.append(f"   {e.suggestion}")

        console.print(Panel(
            "\n".join(content),
            title=f"[{color}]{title}[/{color}]",
            border_style=color,
            expand=False
        ))

        if verbose and e.original_error:
            console.print(f"\n[dim]Original error: {e.original_error}[/dim]")

    @staticmethod
    def _handle_unknown_error(e: BaseException, verbose: bool) -> None:
        """Handle unknown errors"""
        content = [
            "[bold red]Unexpected Error[/bold red]\n",
            f"[white]{e}[/white]\n",
            "[yellow]This might be a bug. Please report it.[/yellow]"
        ]

        console.print(Panel(
            "\n".join(content),
            title="[red]Unexpected Error[/red]",
            border_style="red",
            expand=False
        ))

        if verbose:
            console.print("\n[dim]Traceback:[/dim]")
            console.print(f"[dim]{traceback.format_exc()}[/dim]")

    @staticmethod
    def display_error_summary(errors: list) -> None:
        """
        Display summary of multiple errors (e.g. failed sweep points)

        Args:
            errors: List of errors
        """
        if not errors:
            return

        table = Table(title="Error Summary", show_header=True, header_style="bold magenta")
        table.add_column("Type", style="cyan", width=20)
        table.add_column("Message", style="white", width=50)
        table.add_column("Severity", style="yellow", width=10)

        for error in errors:
            message = error.message if isinstance(error, DPMixError) else str(error)
            severity = error.severity.value.upper() if isinstance(error, DPMixError) else "UNKNOWN"
            table.add_row(
                error.__class__.__name__,
                message[:50] + "..." if len(message) > 50 else message,
                severity
            )

        console.print(table)
