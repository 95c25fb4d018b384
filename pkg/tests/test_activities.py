import pytest

from wristnet.activities import ClassFlags, default_activity_table, load_activity_table, normalize_activity_name
from wristnet.errors import ValidationError


def test_packaged_catalogue(table):
    assert len(table.activities) == 33
    assert len(table.classification_names()) == 29
    assert len(table.regression_names()) == 33
    counts = {"sedentary": 0, "locomotion": 0, "lifestyle": 0}
    for name in table.classification_names():
        flags = table.lookup(name).flags
        assert sum(flags.as_tuple()) == 1
        for key in counts:
            counts[key] += flags.for_task(key)
    assert all(count > 0 for count in counts.values())


def test_lookup_normalizes_names(table):
    assert table.lookup("stretching  yoga*").regression_only
    assert "computer work" in table
    assert normalize_activity_name(" leisure\twalk ") == "LEISURE WALK"
    with pytest.raises(ValidationError, match="Unknown activity"):
        table.lookup("JUGGLING")


def test_flags_byte_encoding():
    flags = ClassFlags(lifestyle=True)
    assert ClassFlags.from_byte(flags.to_byte()) == flags
    with pytest.raises(ValidationError):
        ClassFlags.from_dict({"sedentary": True, "locomotion": True})
    with pytest.raises(ValidationError):
        ClassFlags(sedentary=True).for_task("met_regression")


@pytest.mark.parametrize(
    "body",
    [
        "activities:\n  NAPPING: {}\n",
        "activities:\n  NAPPING: {sedentary: true, regression_only: true}\n",
        "activities:\n  NAPPING: {sleepy: true}\n",
        "activities:\n  napping: {sedentary: true}\n  NAPPING: {sedentary: true}\n",
    ],
)
def test_invalid_catalogues(tmp_path, body):
    path = tmp_path / "activities.yaml"
    path.write_text(body)
    with pytest.raises(ValidationError):
        load_activity_table(str(path))


def test_catalogue_override_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "custom.yaml"
    path.write_text("activities:\n  NAPPING: {sedentary: true}\n  ROWING: {regression_only: true}\n")
    monkeypatch.setenv("WRISTNET_ACTIVITIES", str(path))
    custom = default_activity_table()
    assert sorted(custom.activities) == ["NAPPING", "ROWING"]
    assert custom.classification_names() == ["NAPPING"]
