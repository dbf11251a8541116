use std::ffi::CString;

use pyflexcube::pyflexcube;
use pyo3::prelude::*;

fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn module_works_from_an_embedded_interpreter() {
    pyo3::append_to_inittab!(pyflexcube);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(format!(
            r#"
import pyflexcube as fc

box = fc.Polytope.from_box([0, 0, 0], [1, 1, 1])
big = box.minkowski_sum(box)
assert abs(big.volume() - 8.0) < 1e-9
assert big.contains(box) and not box.contains(big)
assert big.pontryagin_diff(box).hausdorff(box) < 1e-9
assert box.pontryagin_diff(big) is None

need = fc.needed_envelope([5.0] * 16, 0.25)
assert abs(need.eps_plus - 20.0) < 1e-12
covered, short = fc.adequacy(box, need.to_polytope())
assert not covered and "pi+" in short and "eps+" in short

s = fc.Scenario.load({path:?})
assert s.units == ["storage"]
sets = s.reach("storage", k_max=4)
assert len(sets) == 4 and sets[-1].contains(sets[0])

try:
    fc.Scenario.load("missing.toml")
except ValueError as e:
    assert "missing.toml" in str(e)
else:
    raise AssertionError("loading a missing file must raise")
"#,
            path = scenario_path("storage_reach.toml")
        ))
        .unwrap();
        py.run(&code, None, None).map_err(|e| e.display(py)).unwrap();
    });
}
