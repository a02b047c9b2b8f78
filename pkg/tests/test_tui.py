import pytest
from textual.widgets import DataTable, Input

from hicom.models import ExplanationRecord
from hicom.tui.app import CLEAN, FaceDetailScreen, ModuleFilterScreen, ReportBrowser, matches


def record(clip, face, label, attribution, text=""):
    return ExplanationRecord(
        clip_id=clip,
        frame_id="000",
        face_id=face,
        label=label,
        attribution=attribution,
        scores={"M1": 0.2, "M2": 0.7, "M3": None, "M4": None},
        flags={"M1": 0, "M2": 1, "M3": None, "M4": 0},
        text=text or f"Face {face} of {clip}",
    )


RECORDS = [
    record("clip1", "f0", 1, ["M2"], "Face f0 looks fake: M2 found inter-face appearance incompatibility"),
    record("clip1", "f1", 0, []),
    record("clip2", "f0", 1, ["M3", "M4"]),
]


def test_matches():
    fake, real, other = RECORDS
    assert matches(fake, "", None)
    assert matches(fake, "APPEARANCE", None)
    assert not matches(real, "clip2", None)
    assert matches(other, "", "M3") and not matches(fake, "", "M3")
    assert matches(real, "", CLEAN) and not matches(fake, "", CLEAN)


@pytest.mark.asyncio
async def test_browse_filter_and_detail(tmp_path):
    app = ReportBrowser(tmp_path, records=list(RECORDS))
    async with app.run_test() as pilot:
        table = app.query_one(DataTable)
        assert table.row_count == 3

        app.query_one("#search-input", Input).value = "clip2"
        await pilot.pause()
        assert table.row_count == 1
        app.query_one("#search-input", Input).value = ""
        await pilot.pause()
        assert table.row_count == 3

        table.focus()
        await pilot.press("enter")
        await pilot.pause()
        assert isinstance(app.screen, FaceDetailScreen)
        assert app.screen.record.face_id == "f0"
        await pilot.press("escape")
        await pilot.pause()
        assert not isinstance(app.screen, FaceDetailScreen)


@pytest.mark.asyncio
async def test_module_filter_screen(tmp_path):
    app = ReportBrowser(tmp_path, records=list(RECORDS))
    async with app.run_test() as pilot:
        await pilot.press("f")
        await pilot.pause()
        assert isinstance(app.screen, ModuleFilterScreen)
        await pilot.press("escape")
        await pilot.pause()
        assert not isinstance(app.screen, ModuleFilterScreen)
        assert app.module_filter is None

        app.module_filter = CLEAN
        app._apply_filters()
        assert app.query_one(DataTable).row_count == 1


@pytest.mark.asyncio
async def test_missing_run_notifies(tmp_path):
    app = ReportBrowser(tmp_path / "nothing-here")
    async with app.run_test() as pilot:
        await pilot.pause()
        assert app.records == []
        assert app.query_one(DataTable).row_count == 0
