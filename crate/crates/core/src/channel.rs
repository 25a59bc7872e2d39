//! Rician fading channels.
//!
//! Every link is `sqrt(PL) * (sqrt(eps/(eps+1)) * LOS + sqrt(1/(eps+1)) * NLOS)`
//! where `PL = L0 * (d/D0)^(-iota)` is a *power* gain, so `E|h|^2 = PL` per
//! entry. LOS components come from the geometry and stay fixed within a run;
//! NLOS entries are redrawn every slot.
//!
//! For device `k` the effective channel is `h_d[k] + v^H h_c[k]` where
//! `h_c[k] = diag(g_k) f` stacks the per-IRS products of the BS-IRS link `f_m`
//! and the IRS-device link `g_{m,k}`. Element `n` therefore applies the
//! reflection coefficient `conj(v_n)` to the cascaded path.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{IrsPanel, Layout, Point3};

/// Half-wavelength element spacing.
pub const HALF_WAVELENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// LOS-to-NLOS power ratio.
    pub rician_factor: f64,
    pub pathloss_exponent: f64,
    /// Linear power gain at the reference distance.
    pub reference_loss: f64,
    /// Meters.
    pub reference_distance: f64,
}

impl ChannelParams {
    // negated comparisons so that NaN fails validation
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_factor >= 0.0) {
            return Err(Error::config("rician_factor must be >= 0"));
        }
        if !(self.pathloss_exponent > 0.0) {
            return Err(Error::config("pathloss_exponent must be > 0"));
        }
        if !(self.reference_loss > 0.0 && self.reference_loss.is_finite()) {
            return Err(Error::config("reference loss must be positive"));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::config("reference_distance_m must be > 0"));
        }
        Ok(())
    }
}

/// Power gain `L0 * (d/D0)^(-iota)`.
pub fn pathloss(params: &ChannelParams, distance: f64) -> Result<f64> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Geometry(format!("link distance {distance} m")));
    }
    Ok(params.reference_loss
        * (distance / params.reference_distance).powf(-params.pathloss_exponent))
}

/// UPA response `a_x(phi) ⊗ a_y(theta, phi)` with
/// `psi = 2 pi (d/lambda) cos(phi)` and `chi = 2 pi (d/lambda) sin(phi) cos(theta)`.
/// Entry `ix * N_y + iy` is `exp(j (ix psi + iy chi))`.
pub fn los_steering(
    elements_x: usize,
    elements_y: usize,
    azimuth: f64,
    elevation: f64,
    spacing_over_wavelength: f64,
) -> Vec<Complex64> {
    let psi = 2.0 * PI * spacing_over_wavelength * elevation.cos();
    let chi = 2.0 * PI * spacing_over_wavelength * elevation.sin() * azimuth.cos();
    let ax: Vec<Complex64> = (0..elements_x)
        .map(|i| Complex64::from_polar(1.0, i as f64 * psi))
        .collect();
    let ay: Vec<Complex64> = (0..elements_y)
        .map(|i| Complex64::from_polar(1.0, i as f64 * chi))
        .collect();
    ax.iter()
        .flat_map(|&x| ay.iter().map(move |&y| x * y))
        .collect()
}

/// Circularly-symmetric complex Gaussian, zero mean, unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One Rician draw shaped like `los`.
pub fn draw_link<R: Rng + ?Sized>(
    params: &ChannelParams,
    distance: f64,
    los: &[Complex64],
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let amplitude = pathloss(params, distance)?.sqrt();
    Ok(draw_with_amplitude(
        params.rician_factor,
        amplitude,
        los,
        rng,
    ))
}

fn draw_with_amplitude<R: Rng + ?Sized>(
    rician_factor: f64,
    amplitude: f64,
    los: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let (los_w, nlos_w) = rician_weights(rician_factor);
    los.iter()
        .map(|&l| amplitude * (los_w * l + nlos_w * complex_normal(rng)))
        .collect()
}

fn rician_weights(eps: f64) -> (f64, f64) {
    if eps.is_infinite() {
        (1.0, 0.0)
    } else {
        ((eps / (eps + 1.0)).sqrt(), (1.0 / (eps + 1.0)).sqrt())
    }
}

/// Channels of one slot for all devices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSlot {
    /// 1-based slot index.
    pub slot: usize,
    /// `h_d[k]`.
    pub direct: Vec<Complex64>,
    /// `cascaded[k]` is the length-`MN` column `h_c[k]`.
    pub cascaded: Vec<Vec<Complex64>>,
}

impl ChannelSlot {
    pub fn num_devices(&self) -> usize {
        self.direct.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cascaded.first().map_or(0, Vec::len)
    }

    /// `h_d[k] + v^H h_c[k]`.
    pub fn effective(&self, k: usize, v: &[Complex64]) -> Complex64 {
        self.direct[k]
            + v.iter()
                .zip(&self.cascaded[k])
                .map(|(vn, hn)| vn.conj() * hn)
                .sum::<Complex64>()
    }

    /// `|h_k|^2` for every device.
    pub fn gains(&self, v: &[Complex64]) -> Vec<f64> {
        (0..self.num_devices())
            .map(|k| self.effective(k, v).norm_sqr())
            .collect()
    }

    /// The same slot with every cascaded path removed.
    pub fn without_irs(&self) -> ChannelSlot {
        ChannelSlot {
            slot: self.slot,
            direct: self.direct.clone(),
            cascaded: vec![Vec::new(); self.direct.len()],
        }
    }

    pub fn check_shape(&self, devices: usize, elements: usize) -> Result<()> {
        if self.direct.len() != devices || self.cascaded.len() != devices {
            return Err(Error::Shape(format!(
                "slot {} has {} devices, expected {devices}",
                self.slot,
                self.direct.len()
            )));
        }
        if let Some(col) = self.cascaded.iter().find(|c| c.len() != elements) {
            return Err(Error::Shape(format!(
                "slot {} cascaded column has {} rows, expected {elements}",
                self.slot,
                col.len()
            )));
        }
        Ok(())
    }
}

/// Individual link realizations of one slot, before cascading.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDraw {
    /// `bs_irs[m]`: BS to IRS `m`, length `N`.
    pub bs_irs: Vec<Vec<Complex64>>,
    /// `irs_device[m][k]`: IRS `m` to device `k`, length `N`.
    pub irs_device: Vec<Vec<Vec<Complex64>>>,
    /// `direct[k]`.
    pub direct: Vec<Complex64>,
}

impl LinkDraw {
    /// Stacks `diag(g_{m,k}) f_m` over `m` into the columns of `H_c`.
    pub fn assemble(&self, slot: usize) -> ChannelSlot {
        let cascaded = (0..self.direct.len())
            .map(|k| {
                self.bs_irs
                    .iter()
                    .zip(&self.irs_device)
                    .flat_map(|(f, g)| g[k].iter().zip(f).map(|(gn, fn_)| gn * fn_))
                    .collect()
            })
            .collect();
        ChannelSlot {
            slot,
            direct: self.direct.clone(),
            cascaded,
        }
    }
}

#[derive(Debug, Clone)]
struct LinkStatics {
    rician_factor: f64,
    amplitude: f64,
    los: Vec<Complex64>,
}

impl LinkStatics {
    fn new(params: &ChannelParams, distance: f64, los: Vec<Complex64>) -> Result<Self> {
        Ok(Self {
            rician_factor: params.rician_factor,
            amplitude: pathloss(params, distance)?.sqrt(),
            los,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        draw_with_amplitude(self.rician_factor, self.amplitude, &self.los, rng)
    }
}

/// Geometry-derived channel statistics of one run; draws slots on demand.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    bs_irs: Vec<LinkStatics>,
    irs_device: Vec<Vec<LinkStatics>>,
    direct: Vec<LinkStatics>,
}

impl ChannelModel {
    pub fn new(config: &ScenarioConfig, layout: &Layout) -> Result<Self> {
        let (nx, ny) = (config.elements_x, config.elements_y);
        let steer = |panel: &IrsPanel, target: Point3| {
            let (az, el) = panel.departure_angles(target);
            los_steering(nx, ny, az, el, HALF_WAVELENGTH)
        };
        let bs_irs = layout
            .irs
            .iter()
            .map(|panel| {
                LinkStatics::new(
                    &config.links.bs_irs,
                    panel.position.distance(layout.bs),
                    steer(panel, layout.bs),
                )
            })
            .collect::<Result<_>>()?;
        let irs_device = layout
            .irs
            .iter()
            .map(|panel| {
                layout
                    .devices
                    .iter()
                    .map(|&dev| {
                        LinkStatics::new(
                            &config.links.irs_device,
                            panel.position.distance(dev),
                            steer(panel, dev),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let direct = layout
            .devices
            .iter()
            .map(|&dev| {
                LinkStatics::new(
                    &config.links.bs_device,
                    dev.distance(layout.bs),
                    vec![Complex64::new(1.0, 0.0)],
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            bs_irs,
            irs_device,
            direct,
        })
    }

    /// Draws `f_m`, `g_{m,k}` and `h_{d,k}` independently.
    pub fn draw_links<R: Rng + ?Sized>(&self, rng: &mut R) -> LinkDraw {
        LinkDraw {
            bs_irs: self.bs_irs.iter().map(|l| l.draw(rng)).collect(),
            irs_device: self
                .irs_device
                .iter()
                .map(|per_dev| per_dev.iter().map(|l| l.draw(rng)).collect())
                .collect(),
            direct: self.direct.iter().map(|l| l.draw(rng)[0]).collect(),
        }
    }

    pub fn generate_slot<R: Rng + ?Sized>(&self, rng: &mut R, slot: usize) -> ChannelSlot {
        self.draw_links(rng).assemble(slot)
    }
}

/// One-shot slot generation from scratch.
pub fn generate_slot<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    layout: &Layout,
    rng: &mut R,
    slot: usize,
) -> Result<ChannelSlot> {
    Ok(ChannelModel::new(config, layout)?.generate_slot(rng, slot))
}

// ---------------------------------------------------------------------------
// Trace dump / replay
// ---------------------------------------------------------------------------

/// Writes slots as CSV rows `slot,kind,k,n,re,im`; `kind` is `d` (direct,
/// `n = 0`) or `c` (cascaded element `n`). Floats use shortest round-trip
/// formatting, so [`read_channel_trace`] restores them bit-exactly.
pub fn write_channel_trace<W: Write>(out: W, slots: &[ChannelSlot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "kind", "k", "n", "re", "im"])?;
    for s in slots {
        for (k, h) in s.direct.iter().enumerate() {
            w.write_record(&[
                s.slot.to_string(),
                "d".into(),
                k.to_string(),
                "0".into(),
                h.re.to_string(),
                h.im.to_string(),
            ])?;
        }
        for (k, col) in s.cascaded.iter().enumerate() {
            for (n, h) in col.iter().enumerate() {
                w.write_record(&[
                    s.slot.to_string(),
                    "c".into(),
                    k.to_string(),
                    n.to_string(),
                    h.re.to_string(),
                    h.im.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_channel_trace`]. Rows of one slot must be contiguous.
pub fn read_channel_trace<R: Read>(input: R) -> Result<Vec<ChannelSlot>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut slots: Vec<ChannelSlot> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Trace(format!("row {}: {what}", line + 2));
        if rec.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let slot: usize = rec[0].parse().map_err(|_| bad("slot"))?;
        let k: usize = rec[2].parse().map_err(|_| bad("k"))?;
        let n: usize = rec[3].parse().map_err(|_| bad("n"))?;
        let re: f64 = rec[4].parse().map_err(|_| bad("re"))?;
        let im: f64 = rec[5].parse().map_err(|_| bad("im"))?;
        let h = Complex64::new(re, im);
        if slots.last().map(|s| s.slot) != Some(slot) {
            slots.push(ChannelSlot {
                slot,
                direct: Vec::new(),
                cascaded: Vec::new(),
            });
        }
        let cur = slots.last_mut().expect("pushed above");
        match &rec[1] {
            "d" => {
                if k != cur.direct.len() {
                    return Err(bad("direct rows out of order"));
                }
                cur.direct.push(h);
                cur.cascaded.push(Vec::new());
            }
            "c" => {
                let col = cur
                    .cascaded
                    .get_mut(k)
                    .ok_or_else(|| bad("cascaded before direct"))?;
                if n != col.len() {
                    return Err(bad("cascaded rows out of order"));
                }
                col.push(h);
            }
            _ => return Err(bad("kind must be d or c")),
        }
    }
    Ok(slots)
}
