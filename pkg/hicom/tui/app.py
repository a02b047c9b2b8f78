"""Report browser: a textual app over one run's explanation records."""

import logging
from pathlib import Path
from typing import List, Optional

from textual import on
from textual.app import App, ComposeResult
from textual.binding import Binding
from textual.containers import Horizontal, Vertical
from textual.screen import Screen
from textual.widgets import Button, DataTable, Footer, Header, Input, OptionList, Static
from textual.widgets.option_list import Option

from hicom.config import get_config
from hicom.models import MODULE_CUES, ExplanationRecord, MetricsReport, ModuleName
from hicom.pipeline.evaluation import read_detections
from hicom.pipeline.explain import explain_offline, read_explanations

logger = logging.getLogger(__name__)

CLEAN = "clean"


def load_records(run_dir: Path) -> List[ExplanationRecord]:
    """Explanations of a run, falling back to offline templates built from its detections."""
    run_dir = Path(run_dir)
    path = run_dir / "explanations.jsonl"
    if path.exists():
        return read_explanations(path)
    logger.info("No explanations in %s, building offline templates", run_dir)
    return explain_offline(read_detections(run_dir / "detections.jsonl"), get_config().fusion)


def record_key(record: ExplanationRecord) -> str:
    return f"{record.clip_id}|{record.frame_id}|{record.face_id}"


def matches(record: ExplanationRecord, query: str, module: Optional[str]) -> bool:
    if module == CLEAN and record.label:
        return False
    if module not in (None, CLEAN) and module not in record.attribution:
        return False
    if not query:
        return True
    query = query.lower()
    return any(query in field.lower() for field in (record.clip_id, record.frame_id, record.face_id, record.text))


class ModuleFilterScreen(Screen):
    """Pick an attributed module to filter the face table by."""

    CSS = """
    ModuleFilterScreen {
        align: center middle;
    }

    ModuleFilterScreen > Vertical {
        width: 50;
        height: auto;
        background: $surface;
        border: solid $primary;
        padding: 1;
    }

    .filter-title {
        text-align: center;
        text-style: bold;
        margin-bottom: 1;
    }
    """

    BINDINGS = [
        Binding("escape", "cancel", "cancel"),
    ]

    def __init__(self, current_filter: Optional[str] = None, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.current_filter = current_filter
        self.choices = ["all"] + [m.value for m in ModuleName] + [CLEAN]

    def compose(self) -> ComposeResult:
        yield Header()
        with Vertical():
            yield Static("Filter by attributed module", classes="filter-title")
            yield OptionList(id="module-options")
        yield Footer()

    def on_mount(self) -> None:
        option_list = self.query_one(OptionList)
        option_list.add_option(Option("All faces", id="all"))
        for module in ModuleName:
            option_list.add_option(Option(f"{module.value}: {MODULE_CUES[module]}", id=module.value))
        option_list.add_option(Option("Judged real", id=CLEAN))
        current = self.current_filter or "all"
        option_list.highlighted = self.choices.index(current)

    @on(OptionList.OptionSelected)
    def handle_selection(self, event: OptionList.OptionSelected) -> None:
        self.dismiss(event.option_id)

    def action_cancel(self) -> None:
        # Keep the current filter.
        self.dismiss(self.current_filter or "all")


class FaceDetailScreen(Screen):
    """Full explanation of one face."""

    BINDINGS = [
        Binding("escape", "back", "Back"),
    ]

    def __init__(self, record: ExplanationRecord, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.record = record

    def compose(self) -> ComposeResult:
        record = self.record
        verdict = "fake" if record.label else "real"
        yield Header()
        with Vertical():
            yield Static(f"[bold]{record.clip_id} / {record.frame_id} / {record.face_id}[/bold]", classes="detail-title")
            yield Static(f"Verdict: {verdict}", classes="detail-field")
            yield Static(f"Attribution: {', '.join(record.attribution) or 'none'}", classes="detail-field")
            yield Static(f"Source: {record.source}{' (degraded)' if record.degraded else ''}", classes="detail-field")
            yield Static("\n[bold]Modules:[/bold]", classes="detail-section")
            for module in ModuleName:
                score = record.scores.get(module.value)
                flag = record.flags.get(module.value)
                score_text = "n/a" if score is None else f"{score:.3f}"
                flag_text = "n/a" if flag is None else str(flag)
                yield Static(f"  • {module.value} score {score_text}, flag {flag_text}", classes="detail-list")
            yield Static(f"\n{record.text}", classes="detail-description")
            if record.llm_response:
                yield Static("\n[bold]LLM response:[/bold]", classes="detail-section")
                yield Static(record.llm_response, classes="detail-description")
            with Horizontal(classes="button-bar"):
                yield Button("Back", id="back-btn")
        yield Footer()

    def action_back(self) -> None:
        self.app.pop_screen()

    @on(Button.Pressed, "#back-btn")
    def handle_back(self) -> None:
        self.app.pop_screen()


class ReportBrowser(App):
    """Browse per-face decisions and explanations of one evaluation run."""

    CSS = """
    Screen {
        background: $surface;
    }

    #search-input {
        dock: top;
        margin: 1;
    }

    #summary-panel {
        dock: top;
        height: auto;
        background: $panel;
        padding: 0 1;
        margin: 0 1;
    }

    #hover-info {
        height: auto;
        max-height: 6;
        background: $panel;
        border-top: solid $primary;
        padding: 0 1;
        display: none;
    }

    DataTable {
        height: 1fr;
    }

    .detail-title {
        margin: 1 0;
        text-style: bold;
    }

    .detail-field {
        margin: 0 0 0 2;
    }

    .detail-description {
        margin: 1 2;
    }

    .detail-section {
        margin: 1 0 0 2;
    }

    .detail-list {
        margin: 0 0 0 4;
    }

    .button-bar {
        margin: 2;
        height: auto;
        align: center middle;
    }
    """

    BINDINGS = [
        Binding("q", "quit", "quit", show=True, priority=True),
        Binding("/", "focus_search", "search", show=True, priority=True),
        Binding("f", "filter_module", "filter module", show=True, priority=True),
    ]

    def __init__(self, run_dir: Path, records: Optional[List[ExplanationRecord]] = None, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.run_dir = Path(run_dir)
        self.records = records
        self.current_records: List[ExplanationRecord] = []
        self.module_filter: Optional[str] = None
        self.report: Optional[MetricsReport] = None

    def compose(self) -> ComposeResult:
        yield Header()
        yield Input(placeholder="Search clip, frame, face or text...", id="search-input")
        yield Static("", id="summary-panel")
        yield DataTable(id="faces-table")
        yield Static(id="hover-info")
        yield Footer()

    def on_mount(self) -> None:
        self.title = f"hicom {self.run_dir}"
        table = self.query_one(DataTable)
        table.cursor_type = "row"
        table.add_columns("Verdict", "Clip", "Frame", "Face", "Modules", "Source")

        if self.records is None:
            try:
                self.records = load_records(self.run_dir)
            except Exception as e:
                self.records = []
                self.notify(f"Error loading run: {e}", severity="error")
        report_path = self.run_dir / "report.json"
        if report_path.exists():
            self.report = MetricsReport.load(report_path)
        self._update_summary()
        self.current_records = list(self.records)
        self._update_table()
        table.focus()

    def _update_summary(self) -> None:
        panel = self.query_one("#summary-panel", Static)
        n_fake = sum(r.label for r in self.records)
        text = f"{len(self.records)} faces, {n_fake} judged fake"
        if self.report is not None:
            text += f" | FAC {self.report.FAC:.4f}  FCAC {self.report.FCAC:.4f}"
        if self.module_filter:
            text += f" | filter: {self.module_filter}"
        panel.update(text)

    def _update_table(self) -> None:
        table = self.query_one(DataTable)
        table.clear()
        for record in self.current_records:
            table.add_row(
                "fake" if record.label else "real",
                record.clip_id,
                record.frame_id,
                record.face_id,
                ",".join(record.attribution),
                record.source + ("!" if record.degraded else ""),
                key=record_key(record),
            )

    def _apply_filters(self) -> None:
        query = self.query_one("#search-input", Input).value.strip()
        self.current_records = [r for r in self.records if matches(r, query, self.module_filter)]
        self._update_table()
        self._update_summary()

    @on(Input.Changed, "#search-input")
    def handle_search(self, event: Input.Changed) -> None:
        self._apply_filters()

    @on(DataTable.RowSelected)
    def handle_row_selected(self, event: DataTable.RowSelected) -> None:
        key = event.row_key.value
        for record in self.current_records:
            if record_key(record) == key:
                self.push_screen(FaceDetailScreen(record))
                return

    def on_data_table_row_highlighted(self, event: DataTable.RowHighlighted) -> None:
        hover_info = self.query_one("#hover-info", Static)
        row = self.query_one(DataTable).cursor_row
        if row < 0 or row >= len(self.current_records):
            hover_info.styles.display = "none"
            return
        hover_info.update(self.current_records[row].text)
        hover_info.styles.display = "block"

    def action_focus_search(self) -> None:
        self.query_one("#search-input").focus()

    def action_filter_module(self) -> None:
        def on_module_selected(result: Optional[str]) -> None:
            self.module_filter = None if result in (None, "all") else result
            self._apply_filters()

        self.push_screen(ModuleFilterScreen(self.module_filter), on_module_selected)
