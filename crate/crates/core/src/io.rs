//! JSON and CSV interchange formats: sampled spaces, state specifications,
//! generator families, GNS reports, moment tables, and convergence tables.
//!
//! Conventions shared by every format: complex scalars are `[re, im]`
//! pairs, matrices are row-major nested arrays of such pairs, grid points
//! and matrix-entry indices are 0-based (color indices in the Yang-Mills
//! CSV emitted by the CLI are 1-based, matching the formula).  All helpers
//! here are pure string conversions; file handling belongs to callers.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::MatrixTestFunction;
use crate::error::{Error, Result};
use crate::gns::GnsRepresentation;
use crate::matrix_model::{MatrixModelSpec, MomentEntry, MomentMethod, MomentSource, MomentTable};
use crate::matrix_states::ConvergenceRow;
use crate::space::SampledSpace;
use crate::states::{StateFunctional, TabulatedData, TraceMode, WightmanData};

/// A complex number as an `[re, im]` pair.
pub type ComplexDto = [f64; 2];
/// A k×k matrix as row-major rows of `[re, im]` pairs.
pub type MatrixDto = Vec<Vec<ComplexDto>>;

fn cx(z: Complex64) -> ComplexDto {
    [z.re, z.im]
}

fn matrix_to_dto(m: &DMatrix<Complex64>) -> MatrixDto {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| cx(m[(r, c)])).collect())
        .collect()
}

fn matrix_from_dto(dto: &MatrixDto, k: usize) -> Result<DMatrix<Complex64>> {
    if dto.len() != k || dto.iter().any(|row| row.len() != k) {
        return Err(Error::Invalid(format!(
            "expected a {k}×{k} matrix, got {} rows of lengths {:?}",
            dto.len(),
            dto.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(DMatrix::from_fn(k, k, |r, c| {
        Complex64::new(dto[r][c][0], dto[r][c][1])
    }))
}

/// Weighted point set with per-axis periods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDto {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub periodic: Vec<Option<f64>>,
}

impl SpaceDto {
    pub fn from_space(space: &SampledSpace) -> Self {
        Self {
            points: space.points().to_vec(),
            weights: space.weights().to_vec(),
            periodic: space.periodic().to_vec(),
        }
    }

    pub fn build(&self) -> Result<SampledSpace> {
        SampledSpace::new(
            self.points.clone(),
            self.weights.clone(),
            self.periodic.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceModeDto {
    Product,
    Tensor,
}

impl From<TraceModeDto> for TraceMode {
    fn from(d: TraceModeDto) -> Self {
        match d {
            TraceModeDto::Product => TraceMode::Product,
            TraceModeDto::Tensor => TraceMode::Tensor,
        }
    }
}

/// A state specification: `{"kind": "...", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateDto {
    Constant {
        space: SpaceDto,
        k: usize,
        alpha: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace_mode: Option<TraceModeDto>,
    },
    Ultralocal {
        space: SpaceDto,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace_mode: Option<TraceModeDto>,
    },
    Tabulated {
        space: SpaceDto,
        k: usize,
        /// Degree (as a decimal string key, a JSON-object constraint) →
        /// row-major kernel list (mᵈ kernels of size k×k).
        tables: BTreeMap<String, Vec<MatrixDto>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace_mode: Option<TraceModeDto>,
    },
    /// Wick-exact Gaussian matrix-model state; the target size is N.
    MatrixModel { space: SpaceDto, n: usize },
}

impl StateDto {
    pub fn build(&self) -> Result<StateFunctional> {
        match self {
            StateDto::Constant { space, k, alpha, trace_mode } => StateFunctional::new(
                Arc::new(space.build()?),
                *k,
                WightmanData::Constant { alpha: alpha.clone() },
                trace_mode.map(Into::into),
            ),
            StateDto::Ultralocal { space, k, trace_mode } => StateFunctional::new(
                Arc::new(space.build()?),
                *k,
                WightmanData::Ultralocal,
                trace_mode.map(Into::into),
            ),
            StateDto::Tabulated { space, k, tables, trace_mode } => {
                let sp = space.build()?;
                let mut parsed = BTreeMap::new();
                for (deg, kernels) in tables {
                    let deg: usize = deg.parse().map_err(|_| {
                        Error::Invalid(format!("table key {deg:?} is not a degree"))
                    })?;
                    let ms: Result<Vec<_>> =
                        kernels.iter().map(|m| matrix_from_dto(m, *k)).collect();
                    parsed.insert(deg, ms?);
                }
                let data = TabulatedData::new(&sp, *k, parsed)?;
                StateFunctional::new(
                    Arc::new(sp),
                    *k,
                    WightmanData::Tabulated(data),
                    trace_mode.map(Into::into),
                )
            }
            StateDto::MatrixModel { space, n } => StateFunctional::new(
                Arc::new(space.build()?),
                *n,
                WightmanData::MatrixModel(MomentSource::Wick { n: *n }),
                None,
            ),
        }
    }
}

/// One generator: a full value table or a constant/delta shorthand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorDto {
    Constant { matrix: MatrixDto },
    Delta { at: usize, matrix: MatrixDto },
    Values { values: Vec<MatrixDto> },
}

/// A generator family sharing one target size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorsDto {
    pub k: usize,
    pub generators: Vec<GeneratorDto>,
}

impl GeneratorsDto {
    pub fn build(&self, space: &Arc<SampledSpace>) -> Result<Vec<MatrixTestFunction>> {
        self.generators
            .iter()
            .map(|g| match g {
                GeneratorDto::Constant { matrix } => MatrixTestFunction::constant(
                    Arc::clone(space),
                    matrix_from_dto(matrix, self.k)?,
                ),
                GeneratorDto::Delta { at, matrix } => MatrixTestFunction::delta_at(
                    Arc::clone(space),
                    *at,
                    matrix_from_dto(matrix, self.k)?,
                ),
                GeneratorDto::Values { values } => {
                    if values.len() != space.len() {
                        return Err(Error::Invalid(format!(
                            "generator has {} values on a {}-point space",
                            values.len(),
                            space.len()
                        )));
                    }
                    let vals: Result<Vec<_>> =
                        values.iter().map(|m| matrix_from_dto(m, self.k)).collect();
                    MatrixTestFunction::new(Arc::clone(space), self.k, vals?)
                }
            })
            .collect()
    }
}

/// One-matrix-model spec file: `{"N": 2, "couplings": {"2": -0.5}, "seed": 7}`.
///
/// Coupling keys are decimal powers (JSON objects only carry string keys);
/// the sampler settings stay at their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixModelSpecDto {
    #[serde(rename = "N")]
    pub n: usize,
    pub couplings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MatrixModelSpecDto {
    /// Validated spec; `seed_override` (flag or environment) wins over the
    /// file value, and a missing seed defaults to 0.
    pub fn build(&self, seed_override: Option<u64>) -> Result<MatrixModelSpec> {
        let mut couplings = BTreeMap::new();
        for (key, &g) in &self.couplings {
            let power: u32 = key.parse().map_err(|_| {
                Error::Invalid(format!("coupling key {key:?} is not a power"))
            })?;
            couplings.insert(power, g);
        }
        let spec = MatrixModelSpec {
            n: self.n,
            couplings,
            seed: seed_override.or(self.seed).unwrap_or(0),
            sampler: Default::default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The GNS construction summary emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnsReportDto {
    #[serde(rename = "dim_H")]
    pub dim_h: usize,
    /// Null directions quotiented away.
    pub dropped: usize,
    pub min_eig: f64,
    /// Krein signature of the retained directions (all +1 for a positive
    /// state).
    pub signature: Vec<f64>,
    /// Per-generator operator matrices, row-major.
    pub ops: Vec<Vec<Vec<ComplexDto>>>,
    pub vacuum: Vec<ComplexDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl GnsReportDto {
    pub fn from_rep(rep: &GnsRepresentation) -> Self {
        Self {
            dim_h: rep.dim,
            dropped: rep.dropped,
            min_eig: rep.min_eigenvalue,
            signature: rep.signature.clone(),
            ops: rep.ops.iter().map(matrix_to_dto).collect(),
            vacuum: rep.vacuum.iter().map(|&z| cx(z)).collect(),
            config_hash: None,
        }
    }
}

/// Serializes a degree-2 moment table as CSV:
///
/// ```text
/// # n = 2
/// # method = wick
/// # odd_vanish = true
/// i1,j1,i2,j2,re,im,stderr,n_samples
/// 0,0,0,0,0.5,0,0,0
/// ```
///
/// Indices are 0-based.  Entries of arity ≠ 2 do not fit the four index
/// columns and are rejected.
pub fn moment_table_to_csv(table: &MomentTable) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# n = {}\n", table.n));
    out.push_str(&format!(
        "# method = {}\n",
        match table.method {
            MomentMethod::WickExact => "wick",
            MomentMethod::MonteCarlo => "mc",
        }
    ));
    out.push_str(&format!("# odd_vanish = {}\n", table.odd_vanish));
    out.push_str("i1,j1,i2,j2,re,im,stderr,n_samples\n");
    for (idx, entry) in table.entries() {
        if idx.len() != 2 {
            return Err(Error::Invalid(format!(
                "CSV rows carry exactly two index pairs; found an entry of arity {}",
                idx.len()
            )));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            idx[0].0,
            idx[0].1,
            idx[1].0,
            idx[1].1,
            entry.value.re,
            entry.value.im,
            entry.stderr,
            entry.n_samples
        ));
    }
    Ok(out)
}

/// Parses the format written by [`moment_table_to_csv`].
pub fn moment_table_from_csv(text: &str) -> Result<MomentTable> {
    let mut n: Option<usize> = None;
    let mut method = MomentMethod::MonteCarlo;
    let mut odd_vanish = false;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("n =") {
                n = Some(v.trim().parse().map_err(|e| {
                    Error::Invalid(format!("line {}: bad n: {e}", lineno + 1))
                })?);
            } else if let Some(v) = rest.strip_prefix("method =") {
                method = match v.trim() {
                    "wick" => MomentMethod::WickExact,
                    "mc" => MomentMethod::MonteCarlo,
                    other => {
                        return Err(Error::Invalid(format!(
                            "line {}: unknown method {other:?}",
                            lineno + 1
                        )))
                    }
                };
            } else if let Some(v) = rest.strip_prefix("odd_vanish =") {
                odd_vanish = v.trim() == "true";
            }
            continue;
        }
        if line.starts_with("i1,") {
            continue; // column header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Invalid(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_u = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("line {}: {e}", lineno + 1)))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("line {}: {e}", lineno + 1)))
        };
        rows.push((
            vec![
                (parse_u(fields[0])?, parse_u(fields[1])?),
                (parse_u(fields[2])?, parse_u(fields[3])?),
            ],
            MomentEntry {
                value: Complex64::new(parse_f(fields[4])?, parse_f(fields[5])?),
                stderr: parse_f(fields[6])?,
                n_samples: fields[7].trim().parse().map_err(|e| {
                    Error::Invalid(format!("line {}: {e}", lineno + 1))
                })?,
            },
        ));
    }
    let n = n.ok_or_else(|| Error::Invalid("missing \"# n = ...\" header".into()))?;
    let mut table = MomentTable::new(n, method, odd_vanish);
    for (idx, entry) in rows {
        table.insert(idx, entry)?;
    }
    Ok(table)
}

/// `level,dim,max_err_within,max_err_beyond` rows.
pub fn convergence_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("level,dim,max_err_within,max_err_beyond\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.level, r.dim, r.max_err_within, r.max_err_beyond
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::algebra::BorchersElement;
    use crate::matrix_model::gaussian_moment_table;

    #[test]
    fn spaces_round_trip_through_json() {
        let space = SampledSpace::cyclic_1d(4, 0.5).unwrap();
        let json = serde_json::to_string(&SpaceDto::from_space(&space)).unwrap();
        let back: SpaceDto = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build().unwrap();
        assert_eq!(rebuilt, space);
    }

    #[test]
    fn model_spec_files_resolve_seeds_by_precedence() {
        let dto: MatrixModelSpecDto =
            serde_json::from_str(r#"{"N": 2, "couplings": {"2": -0.5}, "seed": 9}"#).unwrap();
        assert_eq!(dto.build(None).unwrap().seed, 9);
        assert_eq!(dto.build(Some(4)).unwrap().seed, 4);
        assert_eq!(dto.build(None).unwrap().couplings.get(&2), Some(&-0.5));

        let no_seed: MatrixModelSpecDto =
            serde_json::from_str(r#"{"N": 1, "couplings": {"2": -1.0}}"#).unwrap();
        assert_eq!(no_seed.build(None).unwrap().seed, 0);

        let bad_key: MatrixModelSpecDto =
            serde_json::from_str(r#"{"N": 2, "couplings": {"two": -0.5}}"#).unwrap();
        assert!(matches!(bad_key.build(None), Err(Error::Invalid(_))));
        let unbounded: MatrixModelSpecDto =
            serde_json::from_str(r#"{"N": 2, "couplings": {"2": 0.5}}"#).unwrap();
        assert!(matches!(
            unbounded.build(None),
            Err(Error::NonNormalizableAction(_))
        ));
    }

    #[test]
    fn state_specs_build_working_functionals() {
        let constant = r#"{
            "kind": "constant",
            "space": {"points": [[0.0]], "weights": [1.0], "periodic": [null]},
            "k": 1,
            "alpha": [1.0, 0.5, 0.25]
        }"#;
        let dto: StateDto = serde_json::from_str(constant).unwrap();
        let omega = dto.build().unwrap();
        let g = MatrixTestFunction::constant(
            Arc::clone(omega.space()),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        let el = BorchersElement::monomial(Complex64::new(1.0, 0.0), &[g.clone(), g]).unwrap();
        assert_abs_diff_eq!(omega.eval(&el).unwrap().re, 0.25, epsilon = 1e-15);

        let mm = r#"{
            "kind": "matrix_model",
            "space": {"points": [[0.0]], "weights": [1.0], "periodic": [null]},
            "n": 2
        }"#;
        let dto: StateDto = serde_json::from_str(mm).unwrap();
        let omega = dto.build().unwrap();
        let e12 = DMatrix::from_fn(2, 2, |r, c| {
            Complex64::new(if (r, c) == (0, 1) { 1.0 } else { 0.0 }, 0.0)
        });
        let e21 = e12.transpose();
        let f = MatrixTestFunction::constant(Arc::clone(omega.space()), e12).unwrap();
        let g = MatrixTestFunction::constant(Arc::clone(omega.space()), e21).unwrap();
        let el = BorchersElement::monomial(Complex64::new(1.0, 0.0), &[f, g]).unwrap();
        assert_abs_diff_eq!(omega.eval(&el).unwrap().re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_specs_carry_their_kernels() {
        let json = r#"{
            "kind": "tabulated",
            "space": {"points": [[0.0], [1.0]], "weights": [1.0, 1.0], "periodic": [null]},
            "k": 1,
            "tables": {"2": [[[[2.0, 0.0]]], [[[0.0, 0.0]]], [[[0.0, 0.0]]], [[[2.0, 0.0]]]]}
        }"#;
        let dto: StateDto = serde_json::from_str(json).unwrap();
        let omega = dto.build().unwrap();
        // ω(δ₀×δ₀) = W₂(0,0)·w₀² = 2.
        let d0 = MatrixTestFunction::delta_at(
            Arc::clone(omega.space()),
            0,
            DMatrix::identity(1, 1),
        )
        .unwrap();
        let el = BorchersElement::monomial(Complex64::new(1.0, 0.0), &[d0.clone(), d0]).unwrap();
        assert_abs_diff_eq!(omega.eval(&el).unwrap().re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn generator_shorthands_expand_correctly() {
        let space = Arc::new(SampledSpace::cyclic_1d(3, 1.0).unwrap());
        let json = r#"{
            "k": 1,
            "generators": [
                {"kind": "constant", "matrix": [[[1.0, 0.0]]]},
                {"kind": "delta", "at": 2, "matrix": [[[1.0, 0.0]]]},
                {"kind": "values", "values": [[[[1.0, 0.0]]], [[[0.0, 1.0]]], [[[0.0, 0.0]]]]}
            ]
        }"#;
        let dto: GeneratorsDto = serde_json::from_str(json).unwrap();
        let gens = dto.build(&space).unwrap();
        assert_eq!(gens.len(), 3);
        assert_abs_diff_eq!(gens[0].value(1)[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gens[1].value(2)[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gens[1].value(0)[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gens[2].value(1)[(0, 0)].im, 1.0, epsilon = 1e-15);

        let bad = GeneratorsDto {
            k: 2,
            generators: vec![GeneratorDto::Constant { matrix: vec![vec![[1.0, 0.0]]] }],
        };
        assert!(matches!(bad.build(&space), Err(Error::Invalid(_))));
    }

    #[test]
    fn gns_reports_expose_the_documented_fields() {
        let space = Arc::new(SampledSpace::single_point());
        let omega = StateFunctional::new(
            Arc::clone(&space),
            1,
            WightmanData::Constant { alpha: vec![1.0, 0.0, 1.0, 0.0, 3.0, 0.0] },
            None,
        )
        .unwrap();
        let g = MatrixTestFunction::constant(Arc::clone(&space), DMatrix::identity(1, 1)).unwrap();
        let rep = crate::gns::gns_construct(
            &omega,
            crate::gns::WordBasis::new(vec![g], 2).unwrap(),
            1e-10,
        )
        .unwrap();
        let dto = GnsReportDto::from_rep(&rep);
        let json = serde_json::to_string_pretty(&dto).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["dim_H"], 3);
        assert_eq!(value["dropped"], 0);
        assert!(value["min_eig"].as_f64().unwrap() > 0.0);
        assert_eq!(value["ops"][0].as_array().unwrap().len(), 3);
        // The vacuum is a unit vector in the retained eigencoordinates.
        let vacuum_norm: f64 = value["vacuum"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p[0].as_f64().unwrap().powi(2) + p[1].as_f64().unwrap().powi(2))
            .sum();
        assert_abs_diff_eq!(vacuum_norm, 1.0, epsilon = 1e-12);
        assert!(value.get("config_hash").is_none());
        let back: GnsReportDto = serde_json::from_str(&json).unwrap();
        assert_eq!(back.dim_h, 3);
    }

    #[test]
    fn moment_tables_round_trip_through_csv() {
        let table = gaussian_moment_table(2, &[2]).unwrap();
        let csv = moment_table_to_csv(&table).unwrap();
        assert!(csv.starts_with("# n = 2\n"));
        assert!(csv.contains("i1,j1,i2,j2,re,im,stderr,n_samples"));
        let back = moment_table_from_csv(&csv).unwrap();
        assert_eq!(back.n, 2);
        assert_eq!(back.len(), table.len());
        for (idx, entry) in table.entries() {
            let got = back.get(idx).expect("entry survives the round trip");
            assert_eq!(got.value, entry.value);
            assert_eq!(got.stderr, entry.stderr);
            assert_eq!(got.n_samples, entry.n_samples);
        }
        assert!(matches!(
            moment_table_from_csv("0,0,0,0,1,0,0,0\n"),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn convergence_rows_print_one_line_each() {
        let rows = vec![
            ConvergenceRow { level: 0, dim: 1, max_err_within: 0.0, max_err_beyond: 2.0 },
            ConvergenceRow { level: 1, dim: 2, max_err_within: 0.0, max_err_beyond: 0.0 },
        ];
        let csv = convergence_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "level,dim,max_err_within,max_err_beyond");
        assert_eq!(lines[1], "0,1,0,2");
    }
}
