use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(eikonal_lab_py::eikonal_lab_py)(py);
        let locals = PyDict::new(py);
        locals.set_item("el", m).unwrap();
        f(py, &locals);
    });
}

fn eval(py: Python<'_>, locals: &Bound<'_, PyDict>, code: &str) -> PyResult<Py<PyAny>> {
    let c = std::ffi::CString::new(code).unwrap();
    py.eval(&c, None, Some(locals)).map(|v| v.unbind())
}

#[test]
fn constant_field_roundtrip() {
    with_module(|py, l| {
        let shape: (usize, usize) =
            eval(py, l, "el.Field.from_spec('builtin:constant:nx=16').shape")
                .unwrap()
                .extract(py)
                .unwrap();
        assert_eq!(shape, (16, 16));
        let (res, ok): (f64, bool) = eval(
            py,
            l,
            "el.Field.from_spec('builtin:constant:nx=16').check_divergence(1e-9)",
        )
        .unwrap()
        .extract(py)
        .unwrap();
        assert!(ok && res < 1e-12);
        let n: usize = eval(
            py,
            l,
            "len(el.Field.from_spec('builtin:constant:nx=16').defect_measure())",
        )
        .unwrap()
        .extract(py)
        .unwrap();
        assert_eq!(n, 0);
        let (eh, ev, _): (f64, f64, f64) = eval(
            py,
            l,
            "el.Field.from_spec('builtin:constant:nx=16').representation(3)",
        )
        .unwrap()
        .extract(py)
        .unwrap();
        assert_eq!((eh, ev), (0.0, 0.0));
    });
}

#[test]
fn errors_become_python_exceptions() {
    with_module(|py, l| {
        let e = eval(py, l, "el.Field.from_spec('builtin:nope')").unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let e = eval(
            py,
            l,
            "el.Field.from_spec('builtin:constant:nx=16').representation(3, 'sideways')",
        )
        .unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let code: i32 = eval(py, l, "el.run_cli(['run', 'paint'])")
            .unwrap()
            .extract(py)
            .unwrap();
        assert_eq!(code, 2);
    });
}
