//! `fht`: key generation, encryption, feature digests, verification and attacks.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fht_core::crossratio::{hfv, serialize_crs, CrossRatioSeq};
use fht_core::cryptanalysis::{
    coa_brute_report, coa_line_report, collision_report, dictionary_report, kpa_report, AffineForgery, AttackReport,
};
use fht_core::elgamal::{FixedExponents, RandomExponents};
use fht_core::masked::Noise;
use fht_core::native::{homomorphic_multiply_demo, Encoding, SumKey};
use fht_core::numerics::PrimeField;
use fht_core::projective::ProjectiveParams;
use fht_core::protocol::{
    cipher_crs, decrypt_bundle, generate_owner_key, owner_prepare, plain_crs, verifier_check, KeyFile, KeySpec,
    OwnerInputs, OwnerKey, Payload, SchemeId, VerificationBundle, Verdict, VerifierSession,
};
use num_bigint::{BigInt, BigUint};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

mod reference;

#[derive(Parser, Debug)]
#[command(name = "fht", version, about = "Cross-ratio feature digests over encrypted data")]
struct Cli {
    /// Seed for every random choice; runs with the same seed are byte-identical.
    #[arg(long, global = true, env = "FHT_SEED")]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BundleFormat {
    Binary,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Side {
    Plain,
    Cipher,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key file with owner and verifier sections.
    Keygen(KeygenArgs),
    /// Encrypt a file into a verification bundle.
    Encrypt(EncryptArgs),
    /// Decrypt a bundle.
    Decrypt(DecryptArgs),
    /// Print the feature digest of a plaintext or of a bundle's ciphertext.
    Hfv(HfvArgs),
    /// Check a bundle with verifier material only; exit 0 consistent, 1 inconsistent, 2 malformed.
    Verify(VerifyArgs),
    /// Run an attack against the reference schemes.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Multiply two encrypted groups and check the cross-ratio of the product.
    DemoMult(DemoArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[arg(long)]
    scheme: SchemeId,
    #[arg(long)]
    p: Option<BigUint>,
    #[arg(long)]
    g: Option<BigUint>,
    #[arg(long)]
    x: Option<BigUint>,
    /// Projective parameters `x0,y0,a,b,c`.
    #[arg(long, allow_hyphen_values = true)]
    proj: Option<ProjectiveParams>,
    /// Comma-separated noise factors; for native-verifier, the verifier's array.
    #[arg(long, value_delimiter = ',')]
    rv: Option<Vec<BigUint>>,
    /// Length of a generated verifier array (native-verifier).
    #[arg(long, default_value_t = 16)]
    rv_len: usize,
    #[arg(long)]
    alphabet: Option<u32>,
    #[arg(long, value_parser = parse_encoding)]
    encoding: Option<Encoding>,
    /// Use the fixed published key for the scheme; explicit options still override.
    #[arg(long)]
    reference_vector: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EncryptArgs {
    #[arg(long, short)]
    key: PathBuf,
    #[arg(long = "in", short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = BundleFormat::Binary)]
    bundle_format: BundleFormat,
    /// Pin exponents and compensation factors to the fixed published values.
    #[arg(long)]
    reference_vector: bool,
    /// Print the ciphertext listing.
    #[arg(long)]
    show: bool,
}

#[derive(Args, Debug)]
struct DecryptArgs {
    #[arg(long, short)]
    key: PathBuf,
    #[arg(long = "in", short)]
    input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HfvArgs {
    #[arg(long, short)]
    key: PathBuf,
    #[arg(long, value_enum)]
    side: Side,
    /// Plaintext file (plain side) or bundle (cipher side).
    #[arg(long = "in", short)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Key file; only its verifier section is read.
    #[arg(long, short)]
    key: PathBuf,
    #[arg(long = "in", short)]
    input: PathBuf,
}

#[derive(Subcommand, Debug)]
enum AttackCmd {
    /// Recover the center from known plaintext bytes.
    Kpa {
        #[arg(long = "in", short)]
        input: PathBuf,
        /// Known pair `byte@index`, repeatable.
        #[arg(long = "pair", required = true, value_parser = parse_pair)]
        pairs: Vec<(u8, usize)>,
        #[arg(long, default_value_t = 256)]
        alphabet: u32,
    },
    /// Recover the line from ciphertext alone.
    CoaLine {
        #[arg(long = "in", short)]
        input: PathBuf,
    },
    /// Enumerate centers from ciphertext alone.
    CoaBrute {
        #[arg(long = "in", short)]
        input: PathBuf,
        #[arg(long, default_value_t = 256)]
        alphabet: u32,
    },
    /// Produce a different group with the same cross-ratio.
    Collide {
        /// Four comma-separated symbols.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        group: Vec<BigInt>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "scale")]
        shift: Option<BigInt>,
        #[arg(long)]
        scale: Option<BigInt>,
        #[arg(long)]
        p: Option<BigUint>,
    },
    /// Tabulate the cross-ratio of every 4-tuple of distinct symbols.
    Dictionary {
        #[arg(long, default_value_t = 64)]
        n: u32,
        #[arg(long, default_value_t = 100_043u32.into())]
        p: BigUint,
        #[arg(long, default_value_t = 1024)]
        budget_mib: u64,
    },
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// native-kf key file.
    #[arg(long, short)]
    key: PathBuf,
    /// At least eight bytes; the fixed message is used when absent.
    #[arg(long = "in", short)]
    input: Option<PathBuf>,
    #[arg(long)]
    reference_vector: bool,
}

fn parse_encoding(s: &str) -> Result<Encoding, String> {
    Encoding::parse(s).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<(u8, usize), String> {
    let (b, i) = s.split_once('@').ok_or("expected byte@index")?;
    Ok((b.parse().map_err(|e| format!("{e}"))?, i.parse().map_err(|e| format!("{e}"))?))
}

/// Exit status 1: a well-formed bundle that failed verification.
const EXIT_INCONSISTENT: u8 = 1;
/// Exit status 2: anything malformed or mismatched.
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn rng_for(cli: &Cli) -> ChaCha20Rng {
    match cli.seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let mut rng = rng_for(cli);
    match &cli.command {
        Command::Keygen(a) => keygen(cli, a, &mut rng),
        Command::Encrypt(a) => encrypt(a, &mut rng),
        Command::Decrypt(a) => decrypt(a),
        Command::Hfv(a) => hfv_cmd(cli, a),
        Command::Verify(a) => verify(cli, a),
        Command::Attack(a) => attack(cli, a),
        Command::DemoMult(a) => demo(cli, a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        return Ok(buf);
    }
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_key_file(path: &Path) -> Result<KeyFile> {
    let text = String::from_utf8(read(path)?).context("key file is not UTF-8")?;
    KeyFile::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn load_bundle(path: &Path) -> Result<VerificationBundle> {
    VerificationBundle::load(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn print_json(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
}

fn keygen(cli: &Cli, a: &KeygenArgs, rng: &mut dyn RngCore) -> Result<u8> {
    let mut spec = if a.reference_vector { reference::key_spec(a.scheme) } else { KeySpec::new(a.scheme) };
    if a.p.is_some() {
        spec.p = a.p.clone();
    }
    if a.g.is_some() {
        spec.g = a.g.clone();
    }
    if a.x.is_some() {
        spec.x = a.x.clone();
    }
    if a.proj.is_some() {
        spec.projective = a.proj.clone();
    }
    if let Some(n) = a.alphabet {
        spec.alphabet = n;
    }
    if let Some(e) = a.encoding {
        spec.encoding = e;
    }
    let verifier_array = a.scheme == SchemeId::NativeVerifier;
    if !verifier_array && a.rv.is_some() {
        spec.rv = a.rv.clone();
    }
    let key = generate_owner_key(&spec, rng)?;
    let verifier_rv = if verifier_array {
        let field = key.field().expect("native schemes are modular");
        Some(match &a.rv {
            Some(v) => Noise::new(v, field)?,
            None => fht_core::native::verifier_random_array(a.rv_len, field, rng)?,
        })
    } else {
        None
    };
    let file = KeyFile::from_owner(&key, verifier_rv.as_ref());
    write(&a.out, file.to_json().as_bytes())?;

    let summary = public_summary(&key);
    match cli.format {
        Format::Json => print_json(serde_json::Value::Object(
            summary.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect(),
        )),
        Format::Text => {
            for (k, v) in summary {
                println!("{k}: {v}");
            }
        }
    }
    Ok(0)
}

fn public_summary(key: &OwnerKey) -> Vec<(String, String)> {
    let mut out = vec![("scheme".to_string(), key.scheme().to_string())];
    if let Some(f) = key.field() {
        out.push(("p".into(), f.modulus().to_string()));
    }
    let eg = match key {
        OwnerKey::Masked(k) => Some(k.elgamal()),
        OwnerKey::NativeKf { key, .. } | OwnerKey::NativeVerifier { key, .. } | OwnerKey::NativeSums { key, .. } => {
            Some(key)
        }
        _ => None,
    };
    if let Some(k) = eg {
        out.push(("g".into(), k.g().to_string()));
        out.push(("y".into(), k.y().to_string()));
    }
    out
}

fn encrypt(a: &EncryptArgs, rng: &mut dyn RngCore) -> Result<u8> {
    let kf = load_key_file(&a.key)?;
    let key = kf.owner_key()?;
    let verifier_rv = kf.verifier_rv()?;
    if key.scheme() == SchemeId::NativeVerifier && verifier_rv.is_none() {
        bail!("native-verifier key file has no verifier array");
    }
    let plaintext = read(&a.input)?;
    let bundle = if a.reference_vector {
        let field = key.field().cloned();
        let mut exps: Box<dyn fht_core::elgamal::ExponentSource> = match key.scheme() {
            SchemeId::Masked | SchemeId::MaskedNoise => Box::new(FixedExponents::from_u64s(&[reference::MASK_R])?),
            _ => Box::new(FixedExponents::from_u64s(&reference::NATIVE_R)?),
        };
        let kfs: Vec<BigUint> = reference::KF.iter().map(|&v| v.into()).collect();
        let sum_keys = match (&field, key.scheme()) {
            (Some(f), SchemeId::NativeSums) => vec![SumKey::from_u64s(reference::SUM_R, reference::SUM_RS, f)?],
            _ => Vec::new(),
        };
        let mut inputs = OwnerInputs::new(exps.as_mut(), rng);
        inputs.kfs = Some(&kfs);
        inputs.sum_keys = Some(&sum_keys);
        inputs.verifier_rv = verifier_rv.as_ref();
        owner_prepare(&plaintext, &key, &mut inputs)?
    } else {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let mut exps = RandomExponents::new(ChaCha20Rng::from_seed(seed));
        let mut inputs = OwnerInputs::new(&mut exps, rng);
        inputs.verifier_rv = verifier_rv.as_ref();
        owner_prepare(&plaintext, &key, &mut inputs)?
    };
    let bytes = match a.bundle_format {
        BundleFormat::Binary => bundle.to_bytes(),
        BundleFormat::Json => bundle.to_json().into_bytes(),
    };
    write(&a.out, &bytes)?;
    if a.show {
        println!("{}", listing(&bundle.ciphertext));
        println!("hfv: {}", bundle.hfv);
    }
    Ok(0)
}

fn listing(p: &Payload) -> String {
    match p {
        Payload::Masked(ct) => {
            let c1: Vec<String> = ct.groups.iter().map(|g| g.c1.to_string()).collect();
            format!("{}\nc1: {}", ct.points_listing(), c1.join(" "))
        }
        other => other.to_text(),
    }
}

fn decrypt(a: &DecryptArgs) -> Result<u8> {
    let key = load_key_file(&a.key)?.owner_key()?;
    let bundle = load_bundle(&a.input)?;
    let pt = decrypt_bundle(&bundle, &key)?;
    match &a.out {
        Some(path) => write(path, &pt)?,
        None => io::stdout().write_all(&pt)?,
    }
    Ok(0)
}

fn hfv_cmd(cli: &Cli, a: &HfvArgs) -> Result<u8> {
    let kf = load_key_file(&a.key)?;
    let rv = kf.verifier_rv()?;
    let seq: CrossRatioSeq = match a.side {
        Side::Plain => plain_crs(&read(&a.input)?, &kf.owner_key()?, rv.as_ref())?,
        Side::Cipher => {
            let bundle = load_bundle(&a.input)?;
            let material = kf.verifier_material()?;
            if bundle.scheme != material.scheme {
                bail!("bundle scheme {} does not match key scheme {}", bundle.scheme, material.scheme);
            }
            cipher_crs(&bundle, rv.as_ref())?
        }
    };
    let digest = hfv(&seq);
    match cli.format {
        Format::Text => {
            println!("cross-ratios: {}", serialize_crs(&seq));
            println!("hfv: {digest}");
        }
        Format::Json => print_json(serde_json::json!({
            "side": format!("{:?}", a.side).to_lowercase(),
            "cross_ratios": serialize_crs(&seq),
            "hfv": digest.to_string(),
        })),
    }
    Ok(0)
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Result<u8> {
    let kf = load_key_file(&a.key)?;
    let material = kf.verifier_material()?;
    let bundle = load_bundle(&a.input)?;
    let verdict = match kf.verifier_rv()? {
        Some(rv) => VerifierSession::from_rv(rv).check(&bundle, &material)?,
        None => verifier_check(&bundle, &material)?,
    };
    let (status, detail, code) = match &verdict {
        Verdict::Consistent => ("consistent", String::new(), 0),
        Verdict::Inconsistent(d) => ("inconsistent", d.clone(), EXIT_INCONSISTENT),
    };
    match cli.format {
        Format::Text if detail.is_empty() => println!("{status}"),
        Format::Text => println!("{status}: {detail}"),
        Format::Json => print_json(serde_json::json!({ "verdict": status, "detail": detail })),
    }
    Ok(code)
}

fn projective_ciphertext(path: &Path) -> Result<fht_core::projective::CiphertextA> {
    match load_bundle(path)?.ciphertext {
        Payload::Projective(ct) => Ok(ct),
        _ => bail!("attacks on ciphertext need a projective bundle"),
    }
}

fn report(cli: &Cli, r: &AttackReport) -> Result<u8> {
    match cli.format {
        Format::Text => println!("{r}"),
        Format::Json => println!("{}", r.to_json()),
    }
    Ok(0)
}

fn attack(cli: &Cli, a: &AttackCmd) -> Result<u8> {
    match a {
        AttackCmd::Kpa { input, pairs, alphabet } => {
            let ct = projective_ciphertext(input)?;
            let known = pairs
                .iter()
                .map(|&(b, i)| {
                    let p = ct.0.get(i).ok_or_else(|| anyhow!("index {i} is past the ciphertext end"))?;
                    Ok((b, p.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            report(cli, &kpa_report(&known, &ct, *alphabet))
        }
        AttackCmd::CoaLine { input } => report(cli, &coa_line_report(&projective_ciphertext(input)?)),
        AttackCmd::CoaBrute { input, alphabet } => {
            report(cli, &coa_brute_report(&projective_ciphertext(input)?, *alphabet, None))
        }
        AttackCmd::Collide { group, shift, scale, p } => {
            let group: [BigInt; 4] =
                group.clone().try_into().map_err(|_| anyhow!("--group needs exactly four symbols"))?;
            let map = match (shift, scale) {
                (_, Some(s)) => AffineForgery::Scale(s.clone()),
                (Some(t), None) => AffineForgery::Shift(t.clone()),
                (None, None) => AffineForgery::Shift(1.into()),
            };
            let field = p.clone().map(PrimeField::new).transpose()?;
            report(cli, &collision_report(&group, map, field.as_ref()))
        }
        AttackCmd::Dictionary { n, p, budget_mib } => {
            let field = PrimeField::new(p.clone())?;
            report(cli, &dictionary_report(&field, *n, u128::from(*budget_mib) << 20))
        }
    }
}

fn demo(cli: &Cli, a: &DemoArgs) -> Result<u8> {
    let key = load_key_file(&a.key)?.owner_key()?;
    let OwnerKey::NativeKf { key: eg, .. } = &key else {
        bail!("demo-mult needs a native-kf key, got {}", key.scheme());
    };
    let msg = match &a.input {
        Some(p) => read(p)?,
        None => reference::MESSAGE.to_vec(),
    };
    let mut rng = rng_for(cli);
    let bundle = if a.reference_vector {
        let mut exps = FixedExponents::from_u64s(&reference::NATIVE_R)?;
        let kfs: Vec<BigUint> = reference::KF.iter().map(|&v| v.into()).collect();
        let mut inputs = OwnerInputs::new(&mut exps, &mut rng);
        inputs.kfs = Some(&kfs);
        owner_prepare(&msg, &key, &mut inputs)?
    } else {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let mut exps = RandomExponents::new(ChaCha20Rng::from_seed(seed));
        owner_prepare(&msg, &key, &mut OwnerInputs::new(&mut exps, &mut rng))?
    };
    let Payload::Native(ct) = &bundle.ciphertext else { unreachable!("native-kf bundles carry native ciphertext") };
    let aux = bundle.aux.as_ref().expect("native-kf bundles carry compensation residues");
    let rep = homomorphic_multiply_demo(ct, eg, aux)?;
    match cli.format {
        Format::Text => {
            println!("{rep}");
            println!("consistent: {}", rep.consistent());
        }
        Format::Json => {
            let list = |v: &[fht_core::numerics::FieldElement]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
            print_json(serde_json::json!({
                "product_c2": list(&rep.product_c2),
                "product_c1": list(&rep.product_c1),
                "decrypted": list(&rep.decrypted),
                "combined_compensation": list(&rep.combined_bundle),
                "plain_cross_ratio": rep.plain_cr.to_string(),
                "cipher_cross_ratio": rep.cipher_cr.to_string(),
                "consistent": rep.consistent(),
            }))
        }
    }
    Ok(if rep.consistent() { 0 } else { EXIT_INCONSISTENT })
}
