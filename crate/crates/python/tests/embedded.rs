use pyo3::ffi::c_str;
use pyo3::prelude::*;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
    Python::attach(|py| {
        let m = PyModule::new(py, "gflbdp").unwrap();
        gflbdp::gflbdp(&m).unwrap();
        f(py, &m);
    });
}

#[test]
fn analytics_from_python() {
    with_module(|py, m| {
        let globals = pyo3::types::PyDict::new(py);
        globals.set_item("g", m).unwrap();
        py.run(
            c_str!(
                r#"
import math
p = g.ProcessParams(1.0, 1.0)
assert abs(g.extinction_prob(p, 1.0, tol=1e-12) - 0.5) < 1e-10
assert abs(g.mittag_leffler(1.0, 1.0, 1.0, 1.0) - math.e) < 1e-12
c = g.joint_cf(g.ProcessParams(1.0, 0.5), 0.5, 0.3, 1.0)
assert isinstance(c, complex) and abs(c) <= 1.0 + 1e-12
"#
            ),
            Some(&globals),
            None,
        )
        .unwrap();
    });
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(|py, m| {
        let ctor = m.getattr("ProcessParams").unwrap();
        let err = ctor.call1((1.0, 1.0, 1.0, 1.0, 0.0, 1.5)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let p = ctor.call1((1.0, 1.0, 1.0, 1.0, 0.4, 0.1)).unwrap();
        let est = m.getattr("mc_estimate").unwrap().call1(("mean", p, 1.0));
        assert!(est
            .unwrap_err()
            .is_instance_of::<pyo3::exceptions::PyNotImplementedError>(py));
    });
}

#[test]
fn monte_carlo_is_reproducible() {
    with_module(|_, m| {
        let p = m
            .getattr("ProcessParams")
            .unwrap()
            .call1((1.0, 0.5))
            .unwrap();
        let run = || {
            let est = m
                .getattr("mc_estimate")
                .unwrap()
                .call1(("extinction", &p, 1.0, 2000, 5))
                .unwrap();
            let value: f64 = est.getattr("value").unwrap().extract().unwrap();
            let n: usize = est.getattr("n_paths").unwrap().extract().unwrap();
            (value, n)
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.1, 2000);
    });
}
