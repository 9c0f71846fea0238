from kernelquant.calibration import calibrate_all, calibrated_conventions
from kernelquant.conventions import DEFAULT


def test_calibration_reproduces_defaults():
    cal = calibrate_all()
    assert calibrated_conventions(cal) == DEFAULT
    # each winner is separated from the runner-up by orders of magnitude
    for c in cal.values():
        scores = sorted(c.scores.values())
        assert scores[0] < 1e-6 < scores[1]


def test_conventions_serializable():
    d = DEFAULT.as_dict()
    assert d["commutator_factor"] == {"re": 0.0, "im": 1.0}
    assert d["form_factor"] == 1.0
