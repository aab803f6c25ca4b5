from slsp.workspace import Workspace, normalize_uri, path_to_uri, uri_to_path

MOD = "module {name}\n  f(): int == 1\nend\n"


def test_overlay_shadows_disk(tmp_path):
    (tmp_path / "A.ms").write_text(MOD.format(name="A"))
    ws = Workspace(path_to_uri(tmp_path))
    uri = path_to_uri(tmp_path / "A.ms")
    assert ws.ok and ws.version == 0
    ws.change(uri, "module A\n  f(): int == true\nend\n")
    assert not ws.ok and ws.version == 1
    ws.close(uri)
    assert ws.ok and ws.version == 2


def test_files_outside_root_are_not_members(tmp_path):
    root = tmp_path / "root"
    root.mkdir()
    ws = Workspace(path_to_uri(root))
    outside = path_to_uri(tmp_path / "X.ms")
    ws.open(outside, "garbage")
    assert ws.files == {}
    assert len(ws.diagnostics_for(outside)) == 1


def test_duplicate_modules_flagged_after_first(tmp_path):
    for name in ("a.ms", "b.ms"):
        (tmp_path / name).write_text(MOD.format(name="Same"))
    ws = Workspace(path_to_uri(tmp_path))
    first, second = ws.files_under()
    assert first.ok
    assert "already defined" in second.diagnostics[0].message


def test_files_under_folder_and_file(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "Z.ms").write_text(MOD.format(name="Z"))
    (tmp_path / "sub" / "A.ms").write_text(MOD.format(name="A"))
    ws = Workspace(path_to_uri(tmp_path))
    assert [f.module.name for f in ws.files_under()] == ["Z", "A"]  # "Z.ms" < "sub/"
    assert [f.module.name for f in ws.files_under(path_to_uri(tmp_path / "sub"))] == ["A"]


def test_uri_round_trip(tmp_path):
    p = tmp_path / "with space" / "M.ms"
    assert uri_to_path(path_to_uri(p)) == p
    assert normalize_uri(path_to_uri(p).replace("%20", " ")) == path_to_uri(p)
