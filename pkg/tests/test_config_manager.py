import json
import logging

from config_manager import (
    CONFIG_PATH,
    DEFAULTS,
    SETTINGS_ENV,
    configure_logging,
    load_published_results,
    load_settings,
    save_settings,
)


def test_shipped_settings_match_defaults():
    assert load_settings(CONFIG_PATH) == DEFAULTS


def test_missing_keys_fall_back(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"chunk_size": 40}), encoding="utf-8")
    settings = load_settings(str(path))
    assert settings["chunk_size"] == 40
    assert settings["overlap"] == DEFAULTS["overlap"]


def test_env_var_and_save(tmp_path, monkeypatch):
    path = tmp_path / "other.json"
    monkeypatch.setenv(SETTINGS_ENV, str(path))
    save_settings({**DEFAULTS, "workers": 16})

    assert json.loads(path.read_text(encoding="utf-8"))["workers"] == 16
    assert load_settings()["workers"] == 16


def test_published_results_layout():
    published = load_published_results()
    for name in ("lstm_chunk_merging", "lstm_no_merging", "et_chunk_merging", "et_no_merging"):
        assert set(published[name]["classes"]) == {"U", "FullStop", "Comma", "Question"}


def test_json_log_records(capsys):
    configure_logging("INFO", "json")
    logging.getLogger("services.pipeline_service").info("restored", extra={"chunks": 3})

    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["message"] == "restored"
    assert record["chunks"] == 3
    assert record["name"] == "services.pipeline_service"


def test_text_log_lines(capsys):
    configure_logging("DEBUG", "text")
    logging.getLogger("chunkpunct").debug("split %d chunks", 4)
    assert capsys.readouterr().err.strip().endswith("[chunkpunct] DEBUG split 4 chunks")
