//! Legacy VTK and CSV writers for study results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::adaptivity::{StepOutput, StepRecord};
use crate::error::Result;
use crate::estimator::ElementIndicators;
use crate::extrapolation::FitResult;
use crate::fem::{DisplacementField, Q2Space};
use crate::optimizer::{quadrature_stresses, DesignState};
use crate::laminate::IsotropicMaterial;
use crate::tensor::Sym2;

/// Plane von Mises stress `sqrt(σ11² − σ11σ22 + σ22² + 3σ12²)`.
pub fn von_mises(s: &Sym2) -> f64 {
    (s.xx * s.xx - s.xx * s.yy + s.yy * s.yy + 3.0 * s.xy * s.xy).max(0.0).sqrt()
}

/// Mean von Mises stress over the quadrature points of each element.
pub fn element_von_mises(space: &Q2Space, u: &DisplacementField, design: &DesignState, mat: &IsotropicMaterial) -> Vec<f64> {
    let nq = space.points_per_element();
    let stresses = quadrature_stresses(space, u, &design.tensors(mat));
    stresses.chunks(nq).map(|c| c.iter().map(von_mises).sum::<f64>() / nq as f64).collect()
}

/// Legacy ASCII unstructured grid: every mesh node as a point with its
/// displacement, one QUAD per element with per-element fields.
pub fn write_vtk(
    w: &mut impl Write,
    title: &str,
    space: &Q2Space,
    u: &DisplacementField,
    cell_fields: &[(&str, &[f64])],
) -> std::io::Result<()> {
    let mesh = space.mesh();
    let n = mesh.num_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for x in mesh.nodes() {
        writeln!(w, "{} {} 0", x[0], x[1])?;
    }
    writeln!(w, "CELLS {} {}", n, 5 * n)?;
    for c in 0..n {
        let k = mesh.corner_nodes(c);
        writeln!(w, "4 {} {} {} {}", k[0], k[1], k[2], k[3])?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "9")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
    writeln!(w, "VECTORS displacement double")?;
    for node in 0..mesh.num_nodes() {
        let v = u.node_value(node);
        writeln!(w, "{} {} 0", v[0], v[1])?;
    }
    writeln!(w, "CELL_DATA {n}")?;
    for (name, values) in cell_fields {
        assert_eq!(values.len(), n, "cell field {name} has the wrong length");
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(w, "{v}")?;
        }
    }
    Ok(())
}

/// Per-element fields: density, von Mises stress, `η` and its four addends,
/// the fallback flag and the refinement level.
pub struct CellFields {
    pub names: Vec<&'static str>,
    pub values: Vec<Vec<f64>>,
}

impl CellFields {
    pub fn new(space: &Q2Space, u: &DisplacementField, design: &DesignState, ind: &ElementIndicators, mat: &IsotropicMaterial) -> Self {
        let mesh = space.mesh();
        let terms: Vec<[f64; 4]> = ind.cells.iter().map(|c| c.terms()).collect();
        let term = |k: usize| terms.iter().map(|t| t[k]).collect::<Vec<f64>>();
        Self {
            names: vec!["theta", "von_mises", "eta", "eta_u_cell", "eta_u_edge", "eta_m", "eta_theta", "fallback", "level"],
            values: vec![
                design.theta.clone(),
                element_von_mises(space, u, design, mat),
                ind.eta(),
                term(0),
                term(1),
                term(2),
                term(3),
                ind.cells.iter().map(|c| if c.is_fallback() { 1.0 } else { 0.0 }).collect(),
                (0..mesh.num_cells()).map(|c| mesh.cell(c).level as f64).collect(),
            ],
        }
    }

    pub fn as_slices(&self) -> Vec<(&str, &[f64])> {
        self.names.iter().zip(&self.values).map(|(n, v)| (*n, v.as_slice())).collect()
    }
}

pub fn write_convergence_csv(w: &mut impl Write, records: &[StepRecord]) -> std::io::Result<()> {
    writeln!(w, "step,elements,dofs,hanging_nodes,max_level,J_h,estimate,volume,multiplier,iterations,converged,marked,fallback_elements")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step, r.cells, r.dofs, r.hanging_nodes, r.max_level, r.compliance, r.estimate, r.volume, r.multiplier, r.iterations,
            r.converged, r.marked, r.fallback_cells
        )?;
    }
    Ok(())
}

pub fn write_timings_csv(w: &mut impl Write, records: &[StepRecord]) -> std::io::Result<()> {
    writeln!(w, "step,elements,wall_ms")?;
    for r in records {
        writeln!(w, "{},{},{:.3}", r.step, r.cells, r.wall.as_secs_f64() * 1e3)?;
    }
    Ok(())
}

pub fn write_fit_report(w: &mut impl Write, fit: &FitResult) -> std::io::Result<()> {
    writeln!(w, "fit J_h = J* + c h^p")?;
    writeln!(w, "J* = {}", fit.j_star)?;
    writeln!(w, "c = {}", fit.c)?;
    if fit.p_identifiable {
        writeln!(w, "p = {}", fit.p)?;
    } else {
        writeln!(w, "p = unidentifiable")?;
    }
    writeln!(w, "residual = {}", fit.residual)?;
    if !fit.converged {
        writeln!(w, "warning: p at the boundary of the search range")?;
    }
    Ok(())
}

/// Observer writing one VTK file and one indicator table per step, and the
/// study tables at the end.
pub struct StudyWriter {
    dir: PathBuf,
    prefix: String,
    material: IsotropicMaterial,
    records: Vec<StepRecord>,
    iterations: Vec<String>,
    files: Vec<PathBuf>,
}

impl StudyWriter {
    pub fn new(dir: &Path, prefix: &str, material: IsotropicMaterial) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), prefix: prefix.to_string(), material, records: Vec::new(), iterations: Vec::new(), files: Vec::new() })
    }

    fn create(&mut self, name: String) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = BufWriter::new(File::create(&path)?);
        self.files.push(path);
        Ok(f)
    }

    pub fn observe(&mut self, out: &StepOutput) -> Result<()> {
        let r = out.record;
        let design = &out.result.solved_design;
        let fields = CellFields::new(out.space, &out.result.displacement, design, out.indicators, &self.material);
        let mut f = self.create(format!("{}_step{:03}.vtk", self.prefix, r.step))?;
        write_vtk(&mut f, &format!("{} step {}", self.prefix, r.step), out.space, &out.result.displacement, &fields.as_slices())?;
        f.flush()?;

        let mesh = out.space.mesh();
        let mut f = self.create(format!("{}_indicators_step{:03}.csv", self.prefix, r.step))?;
        writeln!(f, "element,level,x0,y0,h,{},fallback", fields.names[..7].join(","))?;
        for c in 0..mesh.num_cells() {
            let o = mesh.cell_origin(c);
            let vals: Vec<String> = fields.values.iter().take(7).map(|v| v[c].to_string()).collect();
            write!(f, "{},{},{},{},{},{}", c, mesh.cell(c).level, o[0], o[1], mesh.h(c), vals.join(","))?;
            writeln!(f, ",{}", u8::from(out.indicators.cells[c].is_fallback()))?;
        }
        f.flush()?;

        for it in &out.result.history {
            self.iterations.push(format!("{},{},{},{},{}", r.step, it.iteration, it.compliance, it.volume, it.multiplier));
        }
        self.records.push(r.clone());
        Ok(())
    }

    /// Writes `convergence.csv`, `iterations.csv`, `timings.csv` and, when
    /// given, `fit.txt`.
    pub fn finish(&mut self, fit: Option<&FitResult>) -> Result<()> {
        let records = std::mem::take(&mut self.records);
        let mut f = self.create(format!("{}_convergence.csv", self.prefix))?;
        write_convergence_csv(&mut f, &records)?;
        f.flush()?;
        let mut f = self.create(format!("{}_timings.csv", self.prefix))?;
        write_timings_csv(&mut f, &records)?;
        f.flush()?;
        let mut f = self.create(format!("{}_iterations.csv", self.prefix))?;
        writeln!(f, "step,iteration,J,volume,multiplier")?;
        for line in &self.iterations {
            writeln!(f, "{line}")?;
        }
        f.flush()?;
        if let Some(fit) = fit {
            let mut f = self.create(format!("{}_fit.txt", self.prefix))?;
            write_fit_report(&mut f, fit)?;
            f.flush()?;
        }
        self.records = records;
        Ok(())
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}
