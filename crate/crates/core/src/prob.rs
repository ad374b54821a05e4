//! Probability primitives on finite alphabets.
//!
//! Distributions and conditional kernels are stored as dense row-major
//! tensors. All logarithms are natural logarithms; `0 ln 0 = 0` throughout.
//!
//! | Function | Quantity |
//! |----------|----------|
//! | [`marginalize`] | p(keep) = Σ_dropped p(all) |
//! | [`condition`] | p(free \| given) |
//! | [`entropy`] | H(p) = −Σ p ln p |
//! | [`kl_divergence`] | D(p‖q) = Σ p ln(p/q) |
//! | [`conditional_mutual_information`] | I(X;Y\|C) |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating user-supplied masses before they are
/// renormalized exactly.
pub const INPUT_SUM_TOL: f64 = 1e-9;

/// A finite alphabet, optionally carrying real grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    values: Option<Vec<f64>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("alphabet size must be at least 1".into()));
        }
        Ok(Self { size, values: None })
    }

    /// Alphabet whose symbols are the given strictly increasing real values.
    pub fn with_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("alphabet size must be at least 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("alphabet values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "alphabet values must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            size: values.len(),
            values: Some(values),
        })
    }

    /// Index alphabet `0, 1, ..., size-1` with those integers as values.
    pub fn indexed(size: usize) -> Result<Self> {
        Self::with_values((0..size).map(|i| i as f64).collect())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }
}

/// A probability vector over one alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    alphabet: Alphabet,
    mass: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates nonnegativity and a unit sum within [`INPUT_SUM_TOL`], then
    /// rescales so the sum is 1 to machine precision.
    pub fn new(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != alphabet.size() {
            return Err(Error::Shape(format!(
                "mass has {} entries, alphabet has {}",
                mass.len(),
                alphabet.size()
            )));
        }
        let mass = normalized(mass, "distribution")?;
        Ok(Self { alphabet, mass })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        Self {
            alphabet,
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(alphabet: Alphabet, index: usize) -> Result<Self> {
        if index >= alphabet.size() {
            return Err(Error::Argument(format!(
                "index {index} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        let mut mass = vec![0.0; alphabet.size()];
        mass[index] = 1.0;
        Ok(Self { alphabet, mass })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Mean of the alphabet values under this distribution.
    pub fn mean(&self) -> Result<f64> {
        let values = self
            .alphabet
            .values()
            .ok_or_else(|| Error::Argument("alphabet carries no values".into()))?;
        Ok(self.mass.iter().zip(values).map(|(p, v)| p * v).sum())
    }

    /// Variance of the alphabet values under this distribution.
    pub fn variance(&self) -> Result<f64> {
        let mean = self.mean()?;
        let values = self.alphabet.values().unwrap_or_default();
        Ok(self
            .mass
            .iter()
            .zip(values)
            .map(|(p, v)| p * (v - mean) * (v - mean))
            .sum())
    }
}

/// Whether a [`JointTable`] holds a joint distribution or a conditional
/// kernel, and in the latter case which axes are conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TableMode {
    Joint,
    Conditional { given: Vec<usize> },
}

/// Dense row-major tensor of probabilities indexed by a list of alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
    mode: TableMode,
}

impl JointTable {
    /// Joint distribution; total mass must be 1 within [`INPUT_SUM_TOL`].
    pub fn joint(axes: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self> {
        check_len(&axes, &mass)?;
        let mass = normalized(mass, "joint table")?;
        Ok(Self {
            axes,
            mass,
            mode: TableMode::Joint,
        })
    }

    /// Conditional kernel over the free axes given `given`. Every slice
    /// (fixed index on the given axes) must sum to 1 within
    /// [`INPUT_SUM_TOL`]; slices are then renormalized exactly.
    pub fn conditional(axes: Vec<Alphabet>, mass: Vec<f64>, given: Vec<usize>) -> Result<Self> {
        check_len(&axes, &mass)?;
        check_axis_set(axes.len(), &given)?;
        if given.len() == axes.len() {
            return Err(Error::Argument(
                "a conditional table needs at least one free axis".into(),
            ));
        }
        if let Some(bad) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Argument(format!("negative or non-finite mass {bad}")));
        }
        let mut table = Self {
            axes,
            mass,
            mode: TableMode::Conditional {
                given: given.clone(),
            },
        };
        let shape = table.shape();
        let sums = slice_sums(&shape, &table.mass, &given);
        for (slice, &s) in sums.iter().enumerate() {
            if (s - 1.0).abs() > INPUT_SUM_TOL {
                return Err(Error::NotNormalized {
                    what: format!("conditional slice {}", describe_slice(&shape, &given, slice)),
                    sum: s,
                });
            }
        }
        rescale_slices(&shape, &mut table.mass, &given, &sums);
        Ok(table)
    }

    /// Builds a table from parts the caller guarantees are already valid.
    pub(crate) fn from_parts(axes: Vec<Alphabet>, mass: Vec<f64>, mode: TableMode) -> Self {
        debug_assert_eq!(axes.iter().map(Alphabet::size).product::<usize>(), mass.len());
        Self { axes, mass, mode }
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mode(&self) -> &TableMode {
        &self.mode
    }

    pub fn is_joint(&self) -> bool {
        matches!(self.mode, TableMode::Joint)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Alphabet::size).collect()
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    /// Entry at a multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        let shape = self.shape();
        self.mass[flat_index(&shape, index)]
    }

    /// Treats a rank-one joint table as a distribution.
    pub fn to_distribution(&self) -> Result<DiscreteDistribution> {
        if self.rank() != 1 || !self.is_joint() {
            return Err(Error::Argument(
                "only rank-one joint tables convert to distributions".into(),
            ));
        }
        Ok(DiscreteDistribution {
            alphabet: self.axes[0].clone(),
            mass: self.mass.clone(),
        })
    }
}

impl From<DiscreteDistribution> for JointTable {
    fn from(d: DiscreteDistribution) -> Self {
        JointTable {
            axes: vec![d.alphabet],
            mass: d.mass,
            mode: TableMode::Joint,
        }
    }
}

/// Sums out every axis not in `keep_axes`. The result's axes appear in the
/// order listed in `keep_axes`.
pub fn marginalize(joint: &JointTable, keep_axes: &[usize]) -> Result<JointTable> {
    if !joint.is_joint() {
        return Err(Error::Argument("marginalize needs a joint-mode table".into()));
    }
    if keep_axes.is_empty() {
        return Err(Error::Argument("keep_axes must be nonempty".into()));
    }
    check_axis_set(joint.rank(), keep_axes)?;
    let shape = joint.shape();
    let out_shape: Vec<usize> = keep_axes.iter().map(|&a| shape[a]).collect();
    let mass = project_sum(&shape, &joint.mass, keep_axes, &out_shape);
    Ok(JointTable::from_parts(
        keep_axes.iter().map(|&a| joint.axes[a].clone()).collect(),
        mass,
        TableMode::Joint,
    ))
}

/// Divides a joint table by its marginal over `given_axes`. Slices whose
/// conditioning mass is zero are filled with the uniform distribution.
pub fn condition(joint: &JointTable, given_axes: &[usize]) -> Result<JointTable> {
    if !joint.is_joint() {
        return Err(Error::Argument("condition needs a joint-mode table".into()));
    }
    check_axis_set(joint.rank(), given_axes)?;
    if given_axes.len() == joint.rank() {
        return Err(Error::Argument(
            "conditioning on every axis leaves nothing free".into(),
        ));
    }
    let shape = joint.shape();
    let sums = slice_sums(&shape, &joint.mass, given_axes);
    let free_cells = shape.iter().product::<usize>() / sums.len();
    let uniform = 1.0 / free_cells as f64;
    let given_map = stride_map(&shape, given_axes);
    let mut mass = joint.mass.clone();
    for_each_index(&shape, |flat, idx| {
        let slice = dot(idx, &given_map);
        let s = sums[slice];
        mass[flat] = if s > 0.0 { joint.mass[flat] / s } else { uniform };
    });
    Ok(JointTable::from_parts(
        joint.axes.clone(),
        mass,
        TableMode::Conditional {
            given: given_axes.to_vec(),
        },
    ))
}

/// Shannon entropy in nats.
pub fn entropy(dist: &DiscreteDistribution) -> f64 {
    entropy_of(&dist.mass)
}

/// Entropy in nats of all axes of a joint-mode table.
pub fn joint_entropy(joint: &JointTable) -> Result<f64> {
    if !joint.is_joint() {
        return Err(Error::Argument("joint_entropy needs a joint-mode table".into()));
    }
    Ok(entropy_of(&joint.mass))
}

/// Kullback-Leibler divergence D(p‖q) in nats. Returns `+inf` when p puts
/// mass where q has none.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "distributions have different lengths: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (&a, &b) in p.mass.iter().zip(&q.mass) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total.max(0.0))
}

/// I(X;Y|C) in nats for disjoint axis groups of a joint table. An empty
/// `cond_axes` gives the unconditional mutual information.
pub fn conditional_mutual_information(
    joint: &JointTable,
    x_axes: &[usize],
    y_axes: &[usize],
    cond_axes: &[usize],
) -> Result<f64> {
    if !joint.is_joint() {
        return Err(Error::Argument(
            "mutual information needs a joint-mode table".into(),
        ));
    }
    if x_axes.is_empty() || y_axes.is_empty() {
        return Err(Error::Argument("x_axes and y_axes must be nonempty".into()));
    }
    let all: Vec<usize> = x_axes
        .iter()
        .chain(y_axes)
        .chain(cond_axes)
        .copied()
        .collect();
    check_axis_set(joint.rank(), &all)?;

    let shape = joint.shape();
    let sub = |axes: &[usize]| -> (Vec<f64>, Vec<usize>) {
        let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
        let m = project_sum(&shape, &joint.mass, axes, &out_shape);
        let map = stride_map_into(&shape, axes, &out_shape);
        (m, map)
    };
    let xc: Vec<usize> = x_axes.iter().chain(cond_axes).copied().collect();
    let yc: Vec<usize> = y_axes.iter().chain(cond_axes).copied().collect();
    let (p_xyc, m_xyc) = sub(&all);
    let (p_xc, m_xc) = sub(&xc);
    let (p_yc, m_yc) = sub(&yc);
    let (p_c, m_c) = if cond_axes.is_empty() {
        (vec![1.0], vec![0; shape.len()])
    } else {
        sub(cond_axes)
    };

    // Visit each cell of the (x,y,c) marginal once through a representative
    // full index whose dropped coordinates are zero.
    let sub_shape: Vec<usize> = all.iter().map(|&a| shape[a]).collect();
    let mut total = 0.0;
    let mut full = vec![0usize; shape.len()];
    for_each_index(&sub_shape, |_, idx| {
        for (k, &a) in all.iter().enumerate() {
            full[a] = idx[k];
        }
        let pj = p_xyc[dot(&full, &m_xyc)];
        if pj > 0.0 {
            let a = p_xc[dot(&full, &m_xc)];
            let b = p_yc[dot(&full, &m_yc)];
            let c = p_c[dot(&full, &m_c)];
            total += pj * (pj.ln() + c.ln() - a.ln() - b.ln());
        }
    });
    Ok(total.max(0.0))
}

pub(crate) fn entropy_of(mass: &[f64]) -> f64 {
    let h: f64 = mass
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

fn normalized(mut mass: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if let Some(bad) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Argument(format!(
            "{what} has a negative or non-finite mass {bad}"
        )));
    }
    let sum: f64 = mass.iter().sum();
    if (sum - 1.0).abs() > INPUT_SUM_TOL {
        return Err(Error::NotNormalized {
            what: what.into(),
            sum,
        });
    }
    mass.iter_mut().for_each(|m| *m /= sum);
    Ok(mass)
}

fn check_len(axes: &[Alphabet], mass: &[f64]) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::Shape("a table needs at least one axis".into()));
    }
    let cells: usize = axes.iter().map(Alphabet::size).product();
    if cells != mass.len() {
        return Err(Error::Shape(format!(
            "axes describe {cells} cells but {} masses were given",
            mass.len()
        )));
    }
    Ok(())
}

fn check_axis_set(rank: usize, axes: &[usize]) -> Result<()> {
    for (i, &a) in axes.iter().enumerate() {
        if a >= rank {
            return Err(Error::Argument(format!("unknown axis {a} (rank {rank})")));
        }
        if axes[..i].contains(&a) {
            return Err(Error::Argument(format!("axis {a} listed twice")));
        }
    }
    Ok(())
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

pub(crate) fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    strides(shape).iter().zip(index).map(|(s, i)| s * i).sum()
}

/// Calls `f(flat, multi_index)` for every cell in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(flat, &idx);
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

#[inline]
fn dot(idx: &[usize], map: &[usize]) -> usize {
    idx.iter().zip(map).map(|(i, m)| i * m).sum()
}

/// Per-source-axis stride into the table over `axes` (listed order), zero for
/// dropped axes.
fn stride_map_into(shape: &[usize], axes: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let out_strides = strides(out_shape);
    let mut map = vec![0; shape.len()];
    for (k, &a) in axes.iter().enumerate() {
        map[a] = out_strides[k];
    }
    map
}

fn stride_map(shape: &[usize], axes: &[usize]) -> Vec<usize> {
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    stride_map_into(shape, axes, &out_shape)
}

fn project_sum(shape: &[usize], mass: &[f64], axes: &[usize], out_shape: &[usize]) -> Vec<f64> {
    let map = stride_map_into(shape, axes, out_shape);
    let mut out = vec![0.0; out_shape.iter().product()];
    for_each_index(shape, |flat, idx| {
        out[dot(idx, &map)] += mass[flat];
    });
    out
}

fn slice_sums(shape: &[usize], mass: &[f64], given: &[usize]) -> Vec<f64> {
    let out_shape: Vec<usize> = given.iter().map(|&a| shape[a]).collect();
    project_sum(shape, mass, given, &out_shape)
}

fn rescale_slices(shape: &[usize], mass: &mut [f64], given: &[usize], sums: &[f64]) {
    let map = stride_map(shape, given);
    for_each_index(shape, |flat, idx| {
        mass[flat] /= sums[dot(idx, &map)];
    });
}

fn describe_slice(shape: &[usize], given: &[usize], slice: usize) -> String {
    let out_shape: Vec<usize> = given.iter().map(|&a| shape[a]).collect();
    let st = strides(&out_shape);
    let parts: Vec<String> = given
        .iter()
        .zip(&st)
        .zip(&out_shape)
        .map(|((a, s), n)| format!("axis{a}={}", (slice / s) % n))
        .collect();
    format!("[{}]", parts.join(", "))
}
