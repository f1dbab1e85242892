//! Python bindings for `lineup_spectral`.

use std::fs::File;

use ::lineup_spectral as ls;
use ::lineup_spectral::ingest::{PlantedEffect, SyntheticConfig};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: ls::Error) -> PyErr {
    match err {
        ls::Error::Io(e) => PyIOError::new_err(e.to_string()),
        ls::Error::Numerical(_) | ls::Error::ZeroFunction => {
            PyRuntimeError::new_err(err.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn group(members: Vec<usize>) -> PyResult<ls::Group> {
    ls::Group::new(members).map_err(to_py)
}

/// The Johnson graph J(n, k) on k-player lineups of an n-player roster.
#[pyclass(name = "JohnsonSpace", module = "lineup_spectral", frozen)]
struct PyJohnsonSpace {
    inner: ls::JohnsonSpace,
}

#[pymethods]
impl PyJohnsonSpace {
    #[new]
    fn new(n: usize, k: usize) -> PyResult<Self> {
        Ok(PyJohnsonSpace {
            inner: ls::JohnsonSpace::new(n, k).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn num_lineups(&self) -> usize {
        self.inner.num_lineups()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn adjacency_apply(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.adjacency_apply(&values).map_err(to_py)
    }

    fn project_onto_order(&self, values: Vec<f64>, order: usize) -> PyResult<Vec<f64>> {
        self.inner.project_onto_order(&values, order).map_err(to_py)
    }

    fn decompose(&self, values: Vec<f64>) -> PyResult<PyDecomposition> {
        Ok(PyDecomposition {
            inner: self.inner.decompose(&values).map_err(to_py)?,
        })
    }

    fn null_mass(&self) -> Vec<f64> {
        ls::null_mass(&self.inner).fractions
    }

    #[pyo3(signature = (values, trials, seed))]
    fn permutation_null_mass(
        &self,
        values: Vec<f64>,
        trials: usize,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        Ok(
            ls::permutation_null_mass(&self.inner, &values, trials, seed)
                .map_err(to_py)?
                .fractions,
        )
    }

    fn __repr__(&self) -> String {
        format!("JohnsonSpace(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// Components `f_0..f_k` of a lineup function.
#[pyclass(name = "Decomposition", module = "lineup_spectral", frozen)]
struct PyDecomposition {
    inner: ls::SpectralDecomposition,
}

#[pymethods]
impl PyDecomposition {
    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        self.inner.components().to_vec()
    }

    fn reconstruct(&self) -> Vec<f64> {
        self.inner.reconstruct()
    }

    fn squared_norms(&self) -> Vec<f64> {
        self.inner.squared_norms()
    }

    fn mass(&self) -> PyResult<Vec<f64>> {
        Ok(ls::mass_distribution(&self.inner).map_err(to_py)?.fractions)
    }

    /// Spectral contribution of a 0-based player group.
    fn contribution(&self, members: Vec<usize>) -> PyResult<f64> {
        ls::group_contribution(&self.inner, &group(members)?).map_err(to_py)
    }

    /// Groups of `order` ranked by SCLP (or by raw spectral value).
    #[pyo3(signature = (possessions, order, min_possessions=0, by_sclp=true))]
    fn rank_groups<'py>(
        &self,
        py: Python<'py>,
        possessions: Vec<u64>,
        order: usize,
        min_possessions: u64,
        by_sclp: bool,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let by = if by_sclp {
            ls::RankBy::Sclp
        } else {
            ls::RankBy::SpectralValue
        };
        let rows = ls::rank_groups(&self.inner, &possessions, order, min_possessions, by)
            .map_err(to_py)?;
        rows.iter().map(|r| contribution_dict(py, r)).collect()
    }
}

fn contribution_dict<'py>(
    py: Python<'py>,
    r: &ls::GroupContribution,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("group", r.group.members().to_vec())?;
    d.set_item("order", r.order)?;
    d.set_item("spectral_value", r.spectral_value)?;
    d.set_item("sclp", r.sclp)?;
    d.set_item("plus_minus", r.plus_minus)?;
    d.set_item("possessions", r.possessions)?;
    d.set_item("pm_per_log_poss", r.pm_per_log_poss())?;
    Ok(d)
}

/// A season's success function built from a play CSV.
#[pyclass(name = "SuccessFunction", module = "lineup_spectral", frozen)]
struct PySuccessFunction {
    inner: ls::SuccessFunction,
    plays: Vec<ls::PlayRecord>,
}

#[pymethods]
impl PySuccessFunction {
    #[staticmethod]
    #[pyo3(signature = (path, n=15, k=5))]
    fn from_csv(path: &str, n: usize, k: usize) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let plays = ls::parse_play_csv(file, k).map_err(to_py)?;
        let (inner, selection) = ls::SuccessFunction::from_plays(&plays, n, k).map_err(to_py)?;
        Ok(PySuccessFunction {
            inner,
            plays: selection.plays,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn lineup_possessions(&self) -> Vec<u64> {
        self.inner.lineup_possessions.clone()
    }

    #[getter]
    fn roster(&self) -> Vec<String> {
        self.inner.roster.clone()
    }

    #[getter]
    fn skipped_stints(&self) -> usize {
        self.inner.skipped_stints
    }

    fn group_of(&self, names: Vec<String>) -> PyResult<Vec<usize>> {
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(self
            .inner
            .group_of(&refs)
            .map_err(to_py)?
            .members()
            .to_vec())
    }

    fn group_possessions(&self, members: Vec<usize>) -> PyResult<u64> {
        self.inner
            .group_possessions(&group(members)?)
            .map_err(to_py)
    }

    fn group_plus_minus(&self, members: Vec<usize>) -> PyResult<f64> {
        self.inner.group_plus_minus(&group(members)?).map_err(to_py)
    }

    fn decompose(&self) -> PyResult<PyDecomposition> {
        let space = ls::JohnsonSpace::new(self.inner.n, self.inner.k).map_err(to_py)?;
        Ok(PyDecomposition {
            inner: space.decompose(&self.inner.values).map_err(to_py)?,
        })
    }

    /// Bootstrap statistics for each 0-based group, one dict per group.
    fn bootstrap<'py>(
        &self,
        py: Python<'py>,
        groups: Vec<Vec<usize>>,
        trials: usize,
        seed: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let groups = groups
            .into_iter()
            .map(group)
            .collect::<PyResult<Vec<_>>>()?;
        let reports = py
            .detach(|| {
                ls::bootstrap_group_stats(
                    &self.plays,
                    &self.inner.roster,
                    self.inner.k,
                    &groups,
                    trials,
                    seed,
                )
            })
            .map_err(to_py)?;
        reports
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("group", r.group.members().to_vec())?;
                d.set_item("actual_pm", r.actual_pm)?;
                d.set_item("actual_poss", r.actual_poss)?;
                d.set_item("pm_mean", r.pm_mean)?;
                d.set_item("pm_sd", r.pm_sd)?;
                d.set_item("poss_mean", r.poss_mean)?;
                d.set_item("poss_sd", r.poss_sd)?;
                d.set_item("frac_pm_negative", r.frac_pm_negative)?;
                d.set_item("frac_sclp_negative", r.frac_sclp_negative)?;
                d.set_item("pearson_r", r.pearson_r)?;
                d.set_item("flagged", r.flagged)?;
                d.set_item("sclp_values", r.sclp_values.clone())?;
                d.set_item("pm_per_log_poss_values", r.pm_per_log_poss_values.clone())?;
                Ok(d)
            })
            .collect()
    }

    /// Ridge fit on group indicators with the penalty chosen by CV.
    /// Returns `(lambda, intercept, [(members, order, coefficient)])`.
    #[pyo3(signature = (lambda_grid, folds=10, seed=0, observed_only=false))]
    fn ridge(
        &self,
        lambda_grid: Vec<f64>,
        folds: usize,
        seed: u64,
        observed_only: bool,
    ) -> PyResult<(f64, f64, Vec<(Vec<usize>, usize, f64)>)> {
        let sf = &self.inner;
        let rows: Vec<usize> = (0..sf.values.len())
            .filter(|&i| !observed_only || sf.lineup_possessions[i] > 0)
            .collect();
        let x = ls::ridge::DesignMatrix::for_lineups(sf.n, sf.k, &rows).map_err(to_py)?;
        let y: Vec<f64> = rows.iter().map(|&i| sf.values[i]).collect();
        let cv = ls::cross_validate_lambda(&x, &y, &lambda_grid, folds, seed).map_err(to_py)?;
        let fit = ls::fit_ridge(&x, &y, cv.best_lambda).map_err(to_py)?;
        let table = ls::ridge::coefficient_table(&x, &fit)
            .into_iter()
            .map(|(g, order, b)| (g.members().to_vec(), order, b))
            .collect();
        Ok((cv.best_lambda, fit.intercept, table))
    }
}

#[pyfunction]
fn binomial(n: usize, k: usize) -> usize {
    ls::binomial(n, k)
}

#[pyfunction]
fn rank_subset(members: Vec<usize>, n: usize, k: usize) -> PyResult<usize> {
    Ok(ls::rank_subset(&group(members)?, n, k).map_err(to_py)?.0)
}

#[pyfunction]
fn unrank_subset(index: usize, n: usize, k: usize) -> PyResult<Vec<usize>> {
    Ok(ls::unrank_subset(ls::LineupIndex(index), n, k)
        .map_err(to_py)?
        .members()
        .to_vec())
}

/// Plus-minus of one stint from the team's point of view; `None` when
/// either side had no possessions.
#[pyfunction]
fn stint_plus_minus(
    pts_for: u32,
    pts_against: u32,
    poss_for: u32,
    poss_against: u32,
) -> Option<f64> {
    ls::stint_plus_minus(&ls::Stint {
        game_id: String::new(),
        lineup: Vec::new(),
        opp_lineup: Vec::new(),
        pts_for,
        pts_against,
        poss_for,
        poss_against,
    })
}

/// Writes a synthetic season to `path`. `planted` holds
/// `(0-based members, net points per possession)` pairs.
#[pyfunction]
#[pyo3(signature = (path, seed, n=15, k=5, plays=16000, planted=Vec::new()))]
fn write_synthetic_season(
    path: &str,
    seed: u64,
    n: usize,
    k: usize,
    plays: usize,
    planted: Vec<(Vec<usize>, f64)>,
) -> PyResult<usize> {
    let mut config = SyntheticConfig::new(n, k, plays, seed);
    config.planted = planted
        .into_iter()
        .map(|(members, effect)| PlantedEffect { members, effect })
        .collect();
    let records = ls::generate_synthetic_season(&config).map_err(to_py)?;
    let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    ls::ingest::write_play_csv(&records, file).map_err(to_py)?;
    Ok(records.len())
}

#[pymodule(name = "lineup_spectral")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJohnsonSpace>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PySuccessFunction>()?;
    m.add_function(wrap_pyfunction!(binomial, m)?)?;
    m.add_function(wrap_pyfunction!(rank_subset, m)?)?;
    m.add_function(wrap_pyfunction!(unrank_subset, m)?)?;
    m.add_function(wrap_pyfunction!(stint_plus_minus, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_season, m)?)?;
    Ok(())
}
