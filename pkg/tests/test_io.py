import json
from fractions import Fraction as F

import pytest

from sleepscale.io import (
    InstanceFormatError,
    dumps_canonical,
    encode_rational,
    instance_from_dict,
    instance_to_dict,
    loads_json,
    schedule_from_dict,
    schedule_to_csv,
    schedule_to_dict,
)
from sleepscale.model import (
    Instance,
    Job,
    PiecewiseLinearConvex,
    PowerLaw,
    Schedule,
    active_segment,
    schedule_energy,
    sleep_segment,
)


def sample_instance():
    return Instance((Job("a", 0, F(10, 3), 1), Job("b", F(1, 2), 8, F(5, 2))),
                    PowerLaw(2, 1), F(9, 2))


class TestInstanceFormat:
    def test_round_trip(self):
        inst = sample_instance()
        again = instance_from_dict(loads_json(dumps_canonical(instance_to_dict(inst))))
        assert again == inst

    def test_rational_encoding(self):
        assert encode_rational(F(3)) == 3
        assert encode_rational(F(10, 4)) == "5/2"

    def test_json_decimal_parsed_exactly(self):
        doc = loads_json('{"jobs": [{"id": "a", "release": 0.1, '
                         '"deadline": 1, "volume": 1}], '
                         '"power": {"kind": "power_law", "alpha": 2, "beta": 1}, '
                         '"wakeup_cost": 5}')
        inst = instance_from_dict(doc)
        assert inst.jobs[0].release == F(1, 10)

    def test_ratio_strings_accepted(self):
        doc = {"jobs": [{"id": "a", "release": "1/3", "deadline": "2/3",
                         "volume": 1}],
               "power": {"kind": "power_law", "alpha": 2, "beta": 1},
               "wakeup_cost": 5}
        inst = instance_from_dict(doc)
        assert inst.jobs[0].release == F(1, 3)

    def test_piecewise_round_trip(self):
        inst = Instance((Job("a", 0, 4, 1),),
                        PiecewiseLinearConvex(((0, 1), (1, 2), (2, 5))), 5)
        again = instance_from_dict(instance_to_dict(inst))
        assert again.power == inst.power

    def test_missing_field_is_addressed(self):
        doc = {"jobs": [{"id": "a", "release": 0, "deadline": 1}],
               "power": {"kind": "power_law", "alpha": 2, "beta": 1},
               "wakeup_cost": 5}
        with pytest.raises(InstanceFormatError) as exc:
            instance_from_dict(doc)
        assert "jobs[0]" in str(exc.value) and "volume" in str(exc.value)

    def test_bad_power_kind(self):
        doc = {"jobs": [{"id": "a", "release": 0, "deadline": 1, "volume": 1}],
               "power": {"kind": "cubic?"}, "wakeup_cost": 5}
        with pytest.raises(InstanceFormatError) as exc:
            instance_from_dict(doc)
        assert "power.kind" in str(exc.value)


class TestScheduleFormat:
    def test_round_trip(self):
        inst = sample_instance()
        sch = Schedule((active_segment(0, 1, 1, "a"),
                        active_segment(1, F(3, 2), F(5, 3), "b"),
                        sleep_segment(F(3, 2), 8)))
        doc = schedule_to_dict(sch, schedule_energy(sch, inst))
        again = schedule_from_dict(loads_json(dumps_canonical(doc)))
        assert again.schedule() == sch
        assert again.declared_wakeups == 1

    def test_energy_required(self):
        with pytest.raises(InstanceFormatError):
            schedule_from_dict({"segments": [
                {"start": 0, "end": 1, "state": "sleep"}]})

    def test_csv_boundaries_match_segments(self):
        sch = Schedule((active_segment(0, 1, 1, "a"), sleep_segment(1, 8)))
        rows = schedule_to_csv(sch).strip().splitlines()
        assert rows[0] == "t,speed,state"
        starts = [float(r.split(",")[0]) for r in rows[1:]]
        assert starts == [0.0, 1.0, 8.0]
        assert rows[-1].endswith("end")
