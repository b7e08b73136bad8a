//! Python bindings. Structured results cross the boundary as plain
//! dicts and lists.

use std::collections::HashMap;

use accesslens::annotation_qa::{run_qa as qa_run, truth_from_dictionary, DesignTruth, HitSubmission, QaConfig};
use accesslens::catalog::{classifier_agreement, classify_design as classify, Dictionary as CoreDictionary};
use accesslens::dataset::{train_size as core_train_size, Dataset};
use accesslens::detector::{postprocess as core_postprocess, Detection, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};
use accesslens::evaluation::{evaluate as core_evaluate, iou as core_iou, render_report, EvalParams};
use accesslens::geometry::BBox;
use accesslens::recommender::{suggestions_for_class, IcObjectMapping};
use accesslens::taxonomy::{export_taxonomy, parse_ic as core_parse_ic, Category, InaccessibilityClass};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString, PyTuple};
use serde_json::Value;

create_exception!(accesslens, AccessLensError, PyValueError);

fn err(e: accesslens::Error) -> PyErr {
    AccessLensError::new_err(format!("{}: {e}", e.kind()))
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        Ok(Value::Null)
    } else if obj.is_instance_of::<PyBool>() {
        Ok(Value::Bool(obj.extract()?))
    } else if obj.is_instance_of::<PyInt>() {
        Ok(Value::from(obj.extract::<i64>()?))
    } else if obj.is_instance_of::<PyFloat>() {
        Ok(serde_json::Number::from_f64(obj.extract()?)
            .map(Value::Number)
            .unwrap_or(Value::Null))
    } else if obj.is_instance_of::<PyString>() {
        Ok(Value::String(obj.extract()?))
    } else if let Ok(d) = obj.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (k, v) in d.iter() {
            map.insert(k.str()?.to_string(), from_py(&v)?);
        }
        Ok(Value::Object(map))
    } else if obj.is_instance_of::<PyList>() || obj.is_instance_of::<PyTuple>() {
        obj.try_iter()?.map(|item| from_py(&item?)).collect::<PyResult<Vec<_>>>().map(Value::Array)
    } else {
        Err(PyValueError::new_err(format!("cannot convert {} to JSON", obj.get_type().name()?)))
    }
}

fn serialize<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn deserialize<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>, what: &str) -> PyResult<T> {
    serde_json::from_value(from_py(obj)?).map_err(|e| AccessLensError::new_err(format!("{what}: {e}")))
}

/// A dataset given as a path or as a COCO-style dict.
fn dataset_arg(obj: &Bound<'_, PyAny>) -> PyResult<Dataset> {
    if let Ok(path) = obj.extract::<String>() {
        Dataset::load(path).map_err(err)
    } else {
        let text = from_py(obj)?.to_string();
        Dataset::from_json_str(&text).map_err(err)
    }
}

fn class_arg(obj: &Bound<'_, PyAny>) -> PyResult<InaccessibilityClass> {
    if let Ok(id) = obj.extract::<u32>() {
        InaccessibilityClass::from_id(id).map_err(err)
    } else {
        core_parse_ic(&obj.extract::<String>()?).map_err(err)
    }
}

fn bbox_arg(v: [f64; 4]) -> BBox {
    BBox::from(v)
}

/// The 22 classes as `{id, name, parent_category, evaluable}` dicts.
#[pyfunction]
fn taxonomy(py: Python<'_>) -> PyResult<Py<PyAny>> {
    serialize(py, &export_taxonomy())
}

/// Class id for a class name (case-insensitive).
#[pyfunction]
fn parse_ic(name: &str) -> PyResult<u32> {
    core_parse_ic(name).map(|c| c.id()).map_err(err)
}

#[pyfunction]
fn class_name(id: u32) -> PyResult<&'static str> {
    InaccessibilityClass::from_id(id).map(|c| c.name()).map_err(err)
}

/// IoU of two `[x, y, w, h]` boxes.
#[pyfunction]
fn iou(a: [f64; 4], b: [f64; 4]) -> PyResult<f64> {
    core_iou(&bbox_arg(a), &bbox_arg(b)).map_err(err)
}

/// Score filter plus per-class duplicate suppression; `nms_iou=None`
/// turns suppression off.
#[pyfunction]
#[pyo3(signature = (detections, score_threshold = DEFAULT_SCORE_THRESHOLD, nms_iou = Some(DEFAULT_NMS_IOU)))]
fn postprocess(
    py: Python<'_>,
    detections: &Bound<'_, PyAny>,
    score_threshold: f64,
    nms_iou: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let dets: Vec<Detection> = deserialize(detections, "detections")?;
    serialize(py, &core_postprocess(&dets, score_threshold, nms_iou))
}

/// Evaluate COCO results against ground truth (path or dict).
#[pyfunction]
#[pyo3(signature = (ground_truth, detections, max_detections = None))]
fn evaluate(
    py: Python<'_>,
    ground_truth: &Bound<'_, PyAny>,
    detections: &Bound<'_, PyAny>,
    max_detections: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let ds = dataset_arg(ground_truth)?;
    let dets: Vec<Detection> = deserialize(detections, "detections")?;
    let report = core_evaluate(&ds, &dets, EvalParams { max_detections }).map_err(err)?;
    serialize(py, &report)
}

/// Text table of an evaluation, per-class rows then the aggregate row.
#[pyfunction]
#[pyo3(signature = (ground_truth, detections, label = "AP"))]
fn evaluation_table(ground_truth: &Bound<'_, PyAny>, detections: &Bound<'_, PyAny>, label: &str) -> PyResult<String> {
    let ds = dataset_arg(ground_truth)?;
    let dets: Vec<Detection> = deserialize(detections, "detections")?;
    let report = core_evaluate(&ds, &dets, EvalParams::default()).map_err(err)?;
    Ok(render_report(label, &report))
}

#[pyfunction]
fn dataset_stats(py: Python<'_>, dataset: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    serialize(py, &dataset_arg(dataset)?.stats())
}

/// Image count of the training side of a split.
#[pyfunction]
fn train_size(n: usize, train_fraction: f64) -> usize {
    core_train_size(n, train_fraction)
}

/// Keyword labels for a design: list of `{label, evidence}`.
#[pyfunction]
#[pyo3(signature = (title, description = "", tags = Vec::new()))]
fn classify_design(py: Python<'_>, title: &str, description: &str, tags: Vec<String>) -> PyResult<Py<PyAny>> {
    serialize(py, &classify(title, description, &tags).labels)
}

#[pyclass(name = "Dictionary", module = "accesslens", frozen)]
struct PyDictionary {
    inner: CoreDictionary,
}

#[pymethods]
impl PyDictionary {
    /// The bundled dictionary.
    #[new]
    fn new() -> Self {
        Self {
            inner: CoreDictionary::bundled(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CoreDictionary::load(path).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn version(&self) -> &str {
        self.inner.version()
    }

    fn __len__(&self) -> usize {
        self.inner.designs().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dictionary(version={:?}, designs={}, objects={})",
            self.inner.version(),
            self.inner.designs().len(),
            self.inner.objects().len()
        )
    }

    fn objects(&self) -> Vec<String> {
        self.inner.objects().iter().map(|o| o.name.clone()).collect()
    }

    fn design(&self, py: Python<'_>, design_id: &str) -> PyResult<Py<PyAny>> {
        match self.inner.design(design_id) {
            Some(d) => serialize(py, d),
            None => Ok(py.None()),
        }
    }

    /// Designs for an object, optionally restricted to one category.
    #[pyo3(signature = (object, category = None))]
    fn query(&self, py: Python<'_>, object: &str, category: Option<&str>) -> PyResult<Py<PyAny>> {
        let c = category.map(str::parse::<Category>).transpose().map_err(err)?;
        serialize(py, &self.inner.query(object, c).map_err(err)?)
    }

    /// How often the keyword classifier reproduces stored categories.
    fn agreement(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize(py, &classifier_agreement(&self.inner))
    }
}

/// Grouped suggestions `{actuation, indication, constraint}` for a class
/// name or id.
#[pyfunction]
#[pyo3(signature = (ic, dictionary = None))]
fn recommend(py: Python<'_>, ic: &Bound<'_, PyAny>, dictionary: Option<&PyDictionary>) -> PyResult<Py<PyAny>> {
    let bundled;
    let dict = match dictionary {
        Some(d) => &d.inner,
        None => {
            bundled = CoreDictionary::bundled();
            &bundled
        }
    };
    let grouped = suggestions_for_class(class_arg(ic)?, dict, &IcObjectMapping::default()).map_err(err)?;
    serialize(py, &grouped)
}

/// Validate crowd submissions. `truth` maps design id to
/// `{labels, title, description}`; defaults to the dictionary's labels.
#[pyfunction]
#[pyo3(signature = (submissions, truth = None, dictionary = None, fast_seconds = 40.0, hit_quota = 100))]
fn run_qa(
    py: Python<'_>,
    submissions: &Bound<'_, PyAny>,
    truth: Option<&Bound<'_, PyAny>>,
    dictionary: Option<&PyDictionary>,
    fast_seconds: f64,
    hit_quota: u32,
) -> PyResult<Py<PyAny>> {
    let subs: Vec<HitSubmission> = deserialize(submissions, "submissions")?;
    let truth: HashMap<String, DesignTruth> = match (truth, dictionary) {
        (Some(t), _) => deserialize(t, "truth")?,
        (None, Some(d)) => truth_from_dictionary(&d.inner),
        (None, None) => truth_from_dictionary(&CoreDictionary::bundled()),
    };
    let config = QaConfig {
        fast_seconds,
        hit_quota,
        ..QaConfig::default()
    };
    serialize(py, &qa_run(&subs, &truth, &config).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "accesslens")]
fn accesslens_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AccessLensError", m.py().get_type::<AccessLensError>())?;
    m.add_class::<PyDictionary>()?;
    m.add_function(wrap_pyfunction!(taxonomy, m)?)?;
    m.add_function(wrap_pyfunction!(parse_ic, m)?)?;
    m.add_function(wrap_pyfunction!(class_name, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(postprocess, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluation_table, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_stats, m)?)?;
    m.add_function(wrap_pyfunction!(train_size, m)?)?;
    m.add_function(wrap_pyfunction!(classify_design, m)?)?;
    m.add_function(wrap_pyfunction!(recommend, m)?)?;
    m.add_function(wrap_pyfunction!(run_qa, m)?)?;
    Ok(())
}
