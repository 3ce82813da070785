//! Directory serialization: one Matrix Market file per matrix plus a
//! `manifest.txt` of `key: value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::parametric::CoefficientFn;
use super::{AffineParametricSystem, AffineTerm, Coefficient, ExplicitTensor, HadamardTerm, Nonlinearity, PolynomialSystem};
use crate::error::{Error, Result};
use crate::mmio::{read_sparse, write_sparse};

pub const MANIFEST: &str = "manifest.txt";

/// Ordered `key: value` metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse(format!("manifest is missing key {key}")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse(format!("manifest key {key}: bad integer {v}")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse().map_err(|_| Error::Parse(format!("manifest key {key}: bad number {v}")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("manifest line without ':': {line}")))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST), self.render())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(dir.join(MANIFEST))?)
    }
}

fn write_nonlinearity(dir: &Path, prefix: &str, h: &Nonlinearity, man: &mut Manifest) -> Result<()> {
    match h {
        Nonlinearity::Hadamard(terms) => {
            man.set(format!("{prefix}.storage"), "hadamard");
            man.set(format!("{prefix}.terms"), terms.len());
            for (t, term) in terms.iter().enumerate() {
                man.set(format!("{prefix}.{t}.coefficient"), format!("{:.16e}", term.coefficient));
                for (l, f) in term.factors.iter().enumerate() {
                    let file = format!("{prefix}_t{t}_f{l}.mtx");
                    write_sparse(&dir.join(&file), f)?;
                    man.set(format!("{prefix}.{t}.factor{l}"), file);
                }
            }
        }
        Nonlinearity::Explicit(t) => {
            man.set(format!("{prefix}.storage"), "explicit");
            let file = format!("{prefix}.mtx");
            write_sparse(&dir.join(&file), &t.unfolding)?;
            man.set(format!("{prefix}.file"), file);
        }
    }
    Ok(())
}

fn read_nonlinearity(dir: &Path, prefix: &str, degree: usize, man: &Manifest) -> Result<Nonlinearity> {
    match man.require(&format!("{prefix}.storage"))? {
        "hadamard" => {
            let count = man.require_usize(&format!("{prefix}.terms"))?;
            let mut terms = Vec::with_capacity(count);
            for t in 0..count {
                let coef = man.require_f64(&format!("{prefix}.{t}.coefficient"))?;
                let factors = (0..degree)
                    .map(|l| read_sparse(&dir.join(man.require(&format!("{prefix}.{t}.factor{l}"))?)))
                    .collect::<Result<_>>()?;
                terms.push(HadamardTerm::new(coef, factors)?);
            }
            Ok(Nonlinearity::Hadamard(terms))
        }
        "explicit" => {
            let u = read_sparse(&dir.join(man.require(&format!("{prefix}.file"))?))?;
            Ok(Nonlinearity::Explicit(ExplicitTensor::new(u, degree)?))
        }
        other => Err(Error::Parse(format!("unknown storage kind {other}"))),
    }
}

fn degree_list(man: &Manifest, key: &str) -> Result<Vec<usize>> {
    match man.get(key) {
        None | Some("") => Ok(Vec::new()),
        Some(v) => v
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad degree list {v}"))))
            .collect(),
    }
}

fn join(degrees: impl Iterator<Item = usize>) -> String {
    degrees.map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes `sys` into `dir` (created if needed). `extra` entries are appended
/// to the manifest verbatim.
pub fn save_system(dir: &Path, sys: &PolynomialSystem, extra: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut man = Manifest::new();
    man.set("kind", "polynomial");
    man.set("n", sys.n());
    man.set("m", sys.m());
    man.set("q", sys.q());
    man.set("d", sys.degree());
    for (name, mat) in [("E", &sys.e), ("A", &sys.a), ("B", &sys.b), ("C", &sys.c)] {
        let file = format!("{name}.mtx");
        write_sparse(&dir.join(&file), mat)?;
        man.set(name, file);
    }
    man.set("h_degrees", join(sys.h.keys().copied()));
    for (&k, h) in &sys.h {
        write_nonlinearity(dir, &format!("H{k}"), h, &mut man)?;
    }
    man.set("n_degrees", join(sys.nb.keys().copied()));
    for (&k, nt) in &sys.nb {
        let file = format!("N{k}.mtx");
        write_sparse(&dir.join(&file), &nt.matrix)?;
        man.set(format!("N{k}"), file);
    }
    for (k, v) in extra {
        man.set(k.clone(), v);
    }
    man.write(dir)
}

pub fn load_system(dir: &Path) -> Result<PolynomialSystem> {
    load_system_checked(dir, true)
}

pub(crate) fn load_system_checked(dir: &Path, check_e: bool) -> Result<PolynomialSystem> {
    let man = Manifest::read(dir)?;
    if man.require("kind")? != "polynomial" {
        return Err(Error::Parse("manifest does not describe a polynomial system".into()));
    }
    let mat = |key: &str| read_sparse(&dir.join(man.require(key)?));
    let mut sys = PolynomialSystem::with_e_check(mat("E")?, mat("A")?, mat("B")?, mat("C")?, check_e)?;
    for k in degree_list(&man, "h_degrees")? {
        sys = sys.with_h(k, read_nonlinearity(dir, &format!("H{k}"), k, &man)?)?;
    }
    for k in degree_list(&man, "n_degrees")? {
        sys = sys.with_n(k, mat(&format!("N{k}"))?)?;
    }
    for (key, want) in [("n", sys.n()), ("m", sys.m()), ("q", sys.q())] {
        if man.require_usize(key)? != want {
            return Err(Error::Parse(format!("manifest {key} disagrees with stored matrices")));
        }
    }
    Ok(sys)
}

pub fn save_parametric(dir: &Path, psys: &AffineParametricSystem, extra: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut man = Manifest::new();
    man.set("kind", "parametric");
    man.set("n", psys.n());
    man.set("m", psys.m());
    man.set("q", psys.q());
    man.set("params", psys.num_params());
    for (j, (lo, hi)) in psys.param_box().iter().enumerate() {
        man.set(format!("box.{}", j + 1), format!("{lo:.16e} {hi:.16e}"));
    }
    for (name, terms) in [("E", &psys.e), ("A", &psys.a), ("B", &psys.b), ("C", &psys.c)] {
        man.set(format!("{name}.terms"), terms.len());
        for (i, t) in terms.iter().enumerate() {
            let file = format!("{name}_{i}.mtx");
            write_sparse(&dir.join(&file), &t.matrix)?;
            man.set(format!("{name}.{i}.coefficient"), t.coefficient.tag());
            man.set(format!("{name}.{i}.file"), file);
        }
    }
    man.set("h_degrees", join(psys.h.keys().copied()));
    for (&k, terms) in &psys.h {
        man.set(format!("H{k}.terms"), terms.len());
        for (i, t) in terms.iter().enumerate() {
            man.set(format!("H{k}.{i}.coefficient"), t.coefficient.tag());
            write_nonlinearity(dir, &format!("H{k}_{i}"), &t.matrix, &mut man)?;
        }
    }
    man.set("n_degrees", join(psys.nb.keys().copied()));
    for (&k, terms) in &psys.nb {
        man.set(format!("N{k}.terms"), terms.len());
        for (i, t) in terms.iter().enumerate() {
            let file = format!("N{k}_{i}.mtx");
            write_sparse(&dir.join(&file), &t.matrix)?;
            man.set(format!("N{k}.{i}.coefficient"), t.coefficient.tag());
            man.set(format!("N{k}.{i}.file"), file);
        }
    }
    for (k, v) in extra {
        man.set(k.clone(), v);
    }
    man.write(dir)
}

pub fn load_parametric(dir: &Path, registry: &BTreeMap<String, CoefficientFn>) -> Result<AffineParametricSystem> {
    let man = Manifest::read(dir)?;
    if man.require("kind")? != "parametric" {
        return Err(Error::Parse("manifest does not describe a parametric system".into()));
    }
    let np = man.require_usize("params")?;
    let mut param_box = Vec::with_capacity(np);
    for j in 1..=np {
        let v = man.require(&format!("box.{j}"))?;
        let parts: Vec<f64> = v
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad box entry {v}"))))
            .collect::<Result<_>>()?;
        let [lo, hi] = parts[..] else {
            return Err(Error::Parse(format!("box.{j} needs two numbers")));
        };
        param_box.push((lo, hi));
    }
    let family = |name: &str| -> Result<Vec<AffineTerm<_>>> {
        let count = man.require_usize(&format!("{name}.terms"))?;
        (0..count)
            .map(|i| {
                let coef = Coefficient::from_tag(man.require(&format!("{name}.{i}.coefficient"))?, registry)?;
                let m = read_sparse(&dir.join(man.require(&format!("{name}.{i}.file"))?))?;
                Ok(AffineTerm::new(coef, m))
            })
            .collect()
    };
    let mut psys = AffineParametricSystem::new(family("E")?, family("A")?, family("B")?, family("C")?, param_box)?;
    for k in degree_list(&man, "h_degrees")? {
        let count = man.require_usize(&format!("H{k}.terms"))?;
        let mut terms = Vec::with_capacity(count);
        for i in 0..count {
            let coef = Coefficient::from_tag(man.require(&format!("H{k}.{i}.coefficient"))?, registry)?;
            terms.push(AffineTerm::new(coef, read_nonlinearity(dir, &format!("H{k}_{i}"), k, &man)?));
        }
        psys = psys.with_h(k, terms)?;
    }
    for k in degree_list(&man, "n_degrees")? {
        psys = psys.with_n(k, family(&format!("N{k}"))?)?;
    }
    Ok(psys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::new();
        m.set("n", 3);
        m.set("note", "a: b");
        let back = Manifest::parse(&m.render()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get("note"), Some("a: b"));
    }

    #[test]
    fn system_round_trip() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, -1.0), (1, 0, 0.25), (1, 1, -3.0)]).unwrap();
        let id = SparseMatrix::identity(2);
        let sys = PolynomialSystem::new(id.clone(), a, id.clone(), id.clone())
            .unwrap()
            .with_hadamard(HadamardTerm::elementwise(-1.0 / 3.0, 2, 3))
            .unwrap()
            .with_h(2, Nonlinearity::Explicit(ExplicitTensor::new(SparseMatrix::from_triplets(2, 4, [(0, 3, 2.0)]).unwrap(), 2).unwrap()))
            .unwrap()
            .with_n(1, SparseMatrix::from_triplets(2, 4, [(1, 3, 1.0)]).unwrap())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_system(dir.path(), &sys, &[("benchmark".into(), "toy".into())]).unwrap();
        assert_eq!(load_system(dir.path()).unwrap(), sys);
        assert_eq!(Manifest::read(dir.path()).unwrap().get("benchmark"), Some("toy"));
    }

    #[test]
    fn parametric_round_trip() {
        let id = SparseMatrix::identity(2);
        let psys = AffineParametricSystem::new(
            vec![AffineTerm::constant(id.clone())],
            vec![AffineTerm::constant(id.scaled(-2.0)), AffineTerm::new(Coefficient::Param(0), id.clone())],
            vec![AffineTerm::constant(id.clone())],
            vec![AffineTerm::constant(id.clone())],
            vec![(0.25, 2.0)],
        )
        .unwrap()
        .with_h(3, vec![AffineTerm::constant(Nonlinearity::Hadamard(vec![HadamardTerm::elementwise(-1.0, 2, 3)]))])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_parametric(dir.path(), &psys, &[]).unwrap();
        let back = load_parametric(dir.path(), &BTreeMap::new()).unwrap();
        assert_eq!(back.param_box(), psys.param_box());
        for p in [0.25, 1.0, 2.0] {
            assert_eq!(back.assemble_at_parameter(&[p]).unwrap(), psys.assemble_at_parameter(&[p]).unwrap());
        }
    }
}
