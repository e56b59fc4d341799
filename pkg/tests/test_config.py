from pathlib import Path

import pytest
from pydantic import ValidationError

from egolsm.exceptions import ParseError
from egolsm.models.config import (
    ExperimentConfig,
    InitConfig,
    ProjectionMode,
    Scenario,
    SolverConfig,
)
from egolsm.services.config_service import PREDEFINED_PRESETS, ConfigService


class TestModels:

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.mode == "experiment"
        assert config.centers == [0]
        assert config.scenarios == [Scenario.IMBALANCED]

        solver = SolverConfig()
        assert solver.eta == 0.2
        assert solver.T == 500
        assert solver.projection_mode is ProjectionMode.PRACTICAL
        assert solver.stop_window == 10
        assert InitConfig(k=2).refine_steps == 500
        assert InitConfig(k=2).refine_tol == 1e-10

    def test_bounds_must_be_ordered(self):
        with pytest.raises(ValidationError, match="M2 must be smaller than M1"):
            SolverConfig(M1=1.0, M2=1.0)
        with pytest.raises(ValidationError):
            ExperimentConfig(M1=0.5, M2=2.0)

    def test_solver_config_is_frozen(self):
        solver = SolverConfig()
        with pytest.raises(ValidationError):
            solver.eta = 0.5

    def test_simulation1_needs_even_n(self):
        with pytest.raises(ValidationError, match="even n"):
            ExperimentConfig(n=301)

    def test_dcsbm_latent_dimension(self):
        assert ExperimentConfig(generator="dcsbm", blocks=4, k=3).k == 3
        assert ExperimentConfig(generator="dcsbm", blocks=1, k=1).k == 1
        with pytest.raises(ValidationError, match="latent dimension"):
            ExperimentConfig(generator="dcsbm", blocks=3, k=3)

    def test_network_modes(self, tmp_path):
        with pytest.raises(ValidationError, match="requires a network"):
            ExperimentConfig(mode="fit")
        with pytest.raises(ValidationError, match="generates its networks"):
            ExperimentConfig(mode="experiment", network=tmp_path / "a.txt")
        assert ExperimentConfig(mode="analyze", network=tmp_path / "a.txt").network == tmp_path / "a.txt"

    def test_centers(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(centers=[])
        with pytest.raises(ValidationError):
            ExperimentConfig(centers=[3, -1])

    def test_scenarios_deduplicated_in_order(self):
        config = ExperimentConfig(scenarios=["full", "imbalanced", "full"])
        assert config.scenarios == [Scenario.FULL, Scenario.IMBALANCED]

    def test_sub_configs(self):
        config = ExperimentConfig(
            k=2, eta=0.1, iters=40, projection="theoretical", conditional=True,
            stop_tol=1e-5, M1=5.0, M2=0.1, usvt_const=3.0, prob_clip_eps=0.01,
        )
        solver = config.solver_config()
        assert (solver.eta, solver.T, solver.M1, solver.M2, solver.stop_tol) == (0.1, 40, 5.0, 0.1, 1e-5)
        assert solver.projection_mode is ProjectionMode.THEORETICAL
        assert solver.conditional is True

        init = config.init_config()
        assert (init.k, init.usvt_threshold_const, init.prob_clip_eps) == (2, 3.0, 0.01)


class TestConfigService:

    @pytest.fixture
    def service(self):
        return ConfigService()

    def test_all_presets_valid(self):
        for name, preset in PREDEFINED_PRESETS.items():
            ok, error = preset.validate()
            assert ok, f"{name}: {error}"

    def test_list_and_get(self, service):
        names = [p["name"] for p in service.list_presets()]
        assert names == ["simulation1", "simulation1-desk", "karate", "dcsbm"]
        assert service.get_preset("karate").values["k"] == 2
        with pytest.raises(KeyError):
            service.get_preset("nope")

    def test_normalize_key(self, service):
        assert service.normalize_key("--stop-tol") == "stop_tol"
        assert service.normalize_key("Iterations") == "iters"
        assert service.normalize_key("center") == "centers"

    def test_load_file(self, service, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text(
            "# desk run\n"
            "n = 60\n"
            "iterations: 25\n"
            "scenario = imbalanced, balanced\n"
            "center = 0\n"
            "eta = 0.1   # smaller step\n",
            encoding="utf-8",
        )
        values = service.load_file(path)
        assert values == {
            "n": "60",
            "iters": "25",
            "scenarios": ["imbalanced", "balanced"],
            "centers": ["0"],
            "eta": "0.1",
        }

    def test_unknown_key_reports_line(self, service, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("n = 60\n\nlearning_rate = 0.1\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            service.load_file(path)
        assert info.value.line == 3

    def test_line_without_separator(self, service, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("n 60\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            service.load_file(path)
        assert info.value.line == 1

    def test_missing_file(self, service, tmp_path):
        with pytest.raises(ParseError):
            service.load_file(tmp_path / "missing.conf")

    def test_merge_precedence(self, service, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("n = 100\nreplicates = 3\niters = 30\n", encoding="utf-8")
        config = service.build(
            "simulation1-desk", path, {"iters": 10, "replicates": None, "--stop-tol": 1e-4},
        )
        assert config.n == 100                 # file over preset
        assert config.replicates == 3          # None override skipped
        assert config.iters == 10              # flag over file
        assert config.stop_tol == 1e-4
        assert config.k == 3                   # preset value kept
        assert config.scenarios == [Scenario.IMBALANCED, Scenario.BALANCED, Scenario.FULL]

    def test_unknown_override(self, service):
        with pytest.raises(KeyError):
            service.build(overrides={"learning_rate": 0.1})

    def test_karate_preset_points_at_bundled_data(self, service):
        config = service.build("karate")
        assert config.mode == "analyze"
        assert Path(config.network).exists()
        assert Path(config.labels).exists()
        assert config.centers == [1, 2, 3, 20, 32, 34]

    def test_karate_preset_bounds_the_center_fits(self, service):
        solver = service.build("karate").solver_config()
        assert solver.projection_mode is ProjectionMode.THEORETICAL
        assert (solver.M1, solver.T) == (6.0, 500)
        # an explicit flag still wins
        assert service.build("karate", overrides={"projection": "practical"}).projection is ProjectionMode.PRACTICAL

    @pytest.mark.parametrize("name", ["simulation1", "simulation1-desk", "dcsbm"])
    def test_study_presets_use_bounded_projection(self, service, name):
        solver = service.build(name).solver_config()
        assert solver.projection_mode is ProjectionMode.THEORETICAL
        assert solver.M1 == 15.0

    def test_bundled_config_file(self, service):
        path = Path(__file__).parent / "dataset" / "simulation1.conf"
        config = service.build(config_file=path)
        assert config.generator == "simulation1"
        assert config.n % 2 == 0
        assert len(config.scenarios) == 3
