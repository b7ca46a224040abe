//! A small, deterministic MIMIC-like database and a template set over it.
//!
//! Five tables of 100 rows each are generated from a fixed seed, so every
//! run produces byte-identical CSV files. The templates instantiate to well
//! over a thousand distinct question/SQL pairs, with enough queries over
//! PROCEDURES, PRESCRIPTIONS and LAB to fill an evaluation pool.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{instantiate_templates, QuestionTemplate, SlotBinding, TemplateError};
use crate::io::write_atomic;
use crate::store::{
    build_exec_db, build_value_lookup, save_corpus, ColumnAttr, ExecDb, Sample, SchemaDef, StoreError, TableDef,
    ValueLookup,
};

pub const FIXTURE_SEED: u64 = 20_240_517;
pub const ROWS_PER_TABLE: usize = 100;

const FIRST: [&str; 10] = ["John", "Mary", "Paul", "Linda", "Omar", "Chen", "Ana", "Igor", "Fatima", "Kofi"];
const LAST: [&str; 10] = ["Doe", "O'Neil", "Smith", "Garcia", "Nguyen", "Kowalski", "Haddad", "Silva", "Okafor", "Berg"];
const LANGUAGES: [&str; 6] = ["ENGLISH", "SPANISH", "PORTUGUESE", "HAITIAN", "RUSSIAN", "CANTONESE"];
const RELIGIONS: [&str; 5] = ["CATHOLIC", "PROTESTANT QUAKER", "JEWISH", "MUSLIM", "NOT SPECIFIED"];
const INSURANCE: [&str; 5] = ["Medicare", "Medicaid", "Private", "Government", "Self Pay"];
const ETHNICITIES: [&str; 6] = [
    "WHITE",
    "BLACK/AFRICAN AMERICAN",
    "HISPANIC OR LATINO",
    "ASIAN",
    "AMERICAN INDIAN/ALASKA NATIVE",
    "UNKNOWN/NOT SPECIFIED",
];
const ADMISSIONS: [&str; 4] = ["EMERGENCY", "ELECTIVE", "URGENT", "NEWBORN"];
const PRIMARY: [&str; 8] = [
    "SEPSIS",
    "PNEUMONIA",
    "CONGESTIVE HEART FAILURE",
    "CORONARY ARTERY DISEASE",
    "GASTROINTESTINAL BLEED",
    "STROKE",
    "ACUTE KIDNEY INJURY",
    "DIABETIC KETOACIDOSIS",
];
const DIAGNOSES: [(&str, &str, &str); 15] = [
    ("4280", "CHF NOS", "Congestive heart failure, unspecified"),
    ("42731", "Atrial fibrillation", "Atrial fibrillation"),
    ("5849", "Acute kidney failure NOS", "Acute kidney failure, unspecified"),
    ("25000", "DMII wo cmp nt st uncntr", "Diabetes mellitus without mention of complication"),
    ("4019", "Hypertension NOS", "Unspecified essential hypertension"),
    ("51881", "Acute respiratry failure", "Acute respiratory failure"),
    ("0389", "Septicemia NOS", "Unspecified septicemia"),
    ("486", "Pneumonia, organism NOS", "Pneumonia, organism unspecified"),
    ("2724", "Hyperlipidemia NEC/NOS", "Other and unspecified hyperlipidemia"),
    ("41401", "Crnry athrscl natve vssl", "Coronary atherosclerosis of native coronary artery"),
    ("5990", "Urin tract infection NOS", "Urinary tract infection, site not specified"),
    ("2851", "Ac posthemorrhag anemia", "Acute posthemorrhagic anemia"),
    ("496", "Chr airway obstruct NEC", "Chronic airway obstruction, not elsewhere classified"),
    ("V4581", "Aortocoronary bypass", "Aortocoronary bypass status"),
    ("2762", "Acidosis", "Acidosis"),
];
const PROCEDURES: [(&str, &str, &str); 15] = [
    ("3893", "Venous cath NEC", "Venous catheterization, not elsewhere classified"),
    ("9604", "Insert endotracheal tube", "Insertion of endotracheal tube"),
    ("9671", "Cont inv mec ven <96 hrs", "Continuous invasive mechanical ventilation for less than 96 consecutive hours"),
    ("3615", "1 int mam-cor art bypass", "Single internal mammary-coronary artery bypass"),
    ("3961", "Extracorporeal circulat", "Extracorporeal circulation auxiliary to open heart surgery"),
    ("9904", "Packed cell transfusion", "Transfusion of packed cells"),
    ("8856", "Coronar arteriogr-2 cath", "Coronary arteriography using two catheters"),
    ("3722", "Left heart cardiac cath", "Left heart cardiac catheterization"),
    ("966", "Entral infus nutrit sub", "Enteral infusion of concentrated nutritional substances"),
    ("3995", "Hemodialysis", "Hemodialysis"),
    ("4513", "Sm bowel endoscopy NEC", "Other endoscopy of small intestine"),
    ("3324", "Closed bronchial biopsy", "Closed [endoscopic] biopsy of bronchus"),
    ("8872", "Dx ultrasound-heart", "Diagnostic ultrasound of heart"),
    ("0040", "Proc-one vessel", "Procedure on single vessel"),
    ("3491", "Thoracentesis", "Thoracentesis"),
];
const DRUGS: [(&str, &str); 15] = [
    ("Heparin", "HEPA5I"),
    ("Insulin", "INSULIN"),
    ("Furosemide", "FURO40I"),
    ("Metoprolol", "METO25"),
    ("Potassium Chloride", "KCL20P"),
    ("Acetaminophen", "ACET325"),
    ("Docusate Sodium", "DOCU100"),
    ("Pantoprazole", "PANT40"),
    ("Vancomycin", "VANC1F"),
    ("Morphine Sulfate", "MORP2I"),
    ("Aspirin", "ASA81"),
    ("Lorazepam", "LORA1I"),
    ("Magnesium Sulfate", "MAGS1I"),
    ("Sodium Chloride 0.9% Flush", "NACLFLUSH"),
    ("Senna", "SENN187"),
];
const DRUG_TYPES: [&str; 3] = ["MAIN", "BASE", "ADDITIVE"];
const ROUTES: [&str; 5] = ["PO", "IV", "IV DRIP", "SC", "NG"];
const LABS: [(&str, &str, &str); 15] = [
    ("50912", "Creatinine", "Chemistry"),
    ("50971", "Potassium", "Chemistry"),
    ("50983", "Sodium", "Chemistry"),
    ("51006", "Urea Nitrogen", "Chemistry"),
    ("50931", "Glucose", "Chemistry"),
    ("51221", "Hematocrit", "Hematology"),
    ("51222", "Hemoglobin", "Hematology"),
    ("51265", "Platelet Count", "Hematology"),
    ("51301", "White Blood Cells", "Hematology"),
    ("50820", "pH", "Blood Gas"),
    ("50821", "pO2", "Blood Gas"),
    ("50818", "pCO2", "Blood Gas"),
    ("51491", "pH, Urine", "Hematology"),
    ("51498", "Specific Gravity", "Hematology"),
    ("50868", "Anion Gap", "Chemistry"),
];
const FLUIDS: [&str; 4] = ["Blood", "Urine", "Ascites", "Pleural"];
const FLAGS: [&str; 3] = ["abnormal", "delta", "normal"];

pub fn fixture_schema() -> SchemaDef {
    use ColumnAttr::{Datetime as D, Number as N, Text as T};
    SchemaDef::new(vec![
        TableDef::new("DEMOGRAPHIC", &[
            ("SUBJECT_ID", T),
            ("HADM_ID", T),
            ("NAME", T),
            ("AGE", N),
            ("GENDER", T),
            ("LANGUAGE", T),
            ("RELIGION", T),
            ("INSURANCE", T),
            ("ETHNICITY", T),
            ("ADMISSION_TYPE", T),
            ("DAYS_STAY", N),
            ("DIAGNOSIS", T),
            ("DOB", D),
            ("EXPIRE_FLAG", N),
        ]),
        TableDef::new("DIAGNOSES", &[
            ("SUBJECT_ID", T),
            ("HADM_ID", T),
            ("ICD9_CODE", T),
            ("SHORT_TITLE", T),
            ("LONG_TITLE", T),
        ]),
        TableDef::new("PROCEDURES", &[
            ("SUBJECT_ID", T),
            ("HADM_ID", T),
            ("ICD9_CODE", T),
            ("SHORT_TITLE", T),
            ("LONG_TITLE", T),
        ]),
        TableDef::new("PRESCRIPTIONS", &[
            ("SUBJECT_ID", T),
            ("HADM_ID", T),
            ("DRUG_TYPE", T),
            ("DRUG", T),
            ("FORMULARY_DRUG_CD", T),
            ("ROUTE", T),
            ("DRUG_DOSE", N),
        ]),
        TableDef::new("LAB", &[
            ("SUBJECT_ID", T),
            ("HADM_ID", T),
            ("ITEMID", T),
            ("CHARTTIME", D),
            ("FLAG", T),
            ("LABEL", T),
            ("FLUID", T),
            ("CATEGORY", T),
        ]),
    ])
    .expect("fixture schema is valid")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// CSV contents per table, in schema order.
pub fn fixture_tables() -> Vec<(String, Vec<u8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let subject = |i: usize| (10_000 + i).to_string();
    let hadm = |i: usize| (100_000 + i).to_string();
    // Cycle through each value pool so every value occurs, then shuffle the
    // pairing with other columns through the rng.
    let pick = |pool: &[&str], i: usize, rng: &mut ChaCha8Rng| pool[(i + rng.gen_range(0..pool.len())) % pool.len()].to_string();
    let n = ROWS_PER_TABLE;

    let demographic: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let age: u32 = rng.gen_range(18..90);
            vec![
                subject(i),
                hadm(i),
                format!("{} {}", FIRST[i % 10], LAST[i / 10]),
                age.to_string(),
                ["F", "M"][rng.gen_range(0..2)].to_string(),
                LANGUAGES[i % LANGUAGES.len()].to_string(),
                pick(&RELIGIONS, i, &mut rng),
                pick(&INSURANCE, i, &mut rng),
                ETHNICITIES[(i / 2) % ETHNICITIES.len()].to_string(),
                pick(&ADMISSIONS, i, &mut rng),
                rng.gen_range(1..41u32).to_string(),
                PRIMARY[i % PRIMARY.len()].to_string(),
                format!("{}-{:02}-{:02} 00:00:00", 2180 - age, rng.gen_range(1..13), rng.gen_range(1..29)),
                rng.gen_range(0..2u32).to_string(),
            ]
        })
        .collect();

    let coded = |table: &[(&str, &str, &str)], rng: &mut ChaCha8Rng| -> Vec<Vec<String>> {
        (0..n)
            .map(|i| {
                let who = rng.gen_range(0..n);
                let (code, short, long) = table[i % table.len()];
                vec![subject(who), hadm(who), code.into(), short.into(), long.into()]
            })
            .collect()
    };
    let diagnoses = coded(&DIAGNOSES, &mut rng);
    let procedures = coded(&PROCEDURES, &mut rng);

    let prescriptions: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let who = rng.gen_range(0..n);
            let (drug, code) = DRUGS[i % DRUGS.len()];
            vec![
                subject(who),
                hadm(who),
                pick(&DRUG_TYPES, i, &mut rng),
                drug.into(),
                code.into(),
                ROUTES[(i / DRUGS.len()) % ROUTES.len()].to_string(),
                (rng.gen_range(1..40u32) * 5).to_string(),
            ]
        })
        .collect();

    let lab: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let who = rng.gen_range(0..n);
            let (item, label, category) = LABS[i % LABS.len()];
            vec![
                subject(who),
                hadm(who),
                item.into(),
                format!("2150-{:02}-{:02} {:02}:{:02}:00", rng.gen_range(1..13), rng.gen_range(1..29), rng.gen_range(0..24), rng.gen_range(0..60)),
                FLAGS[(i / LABS.len()) % FLAGS.len()].to_string(),
                label.into(),
                FLUIDS[i % FLUIDS.len()].to_string(),
                category.into(),
            ]
        })
        .collect();

    let schema = fixture_schema();
    let header = |t: &str| -> Vec<&str> { schema.table(t).unwrap().columns.iter().map(|c| c.name.as_str()).collect() };
    [("DEMOGRAPHIC", demographic), ("DIAGNOSES", diagnoses), ("PROCEDURES", procedures), ("PRESCRIPTIONS", prescriptions), ("LAB", lab)]
        .into_iter()
        .map(|(t, rows)| (t.to_string(), csv_bytes(&header(t), &rows)))
        .collect()
}

fn template(id: &str, text: &str, sql: &str, slots: &[(&str, &str, &str)]) -> QuestionTemplate {
    QuestionTemplate {
        id: id.into(),
        text_pattern: text.into(),
        sql_pattern: sql.into(),
        slots: slots
            .iter()
            .map(|(s, t, c)| (s.to_string(), SlotBinding { table: t.to_string(), column: c.to_string() }))
            .collect(),
    }
}

/// Question templates over [`fixture_schema`].
pub fn fixture_templates() -> Vec<QuestionTemplate> {
    const DJ_DIAG: &str = "FROM DEMOGRAPHIC INNER JOIN DIAGNOSES ON DEMOGRAPHIC.HADM_ID = DIAGNOSES.HADM_ID";
    const DJ_PROC: &str = "FROM DEMOGRAPHIC INNER JOIN PROCEDURES ON DEMOGRAPHIC.HADM_ID = PROCEDURES.HADM_ID";
    const DJ_PRES: &str = "FROM DEMOGRAPHIC INNER JOIN PRESCRIPTIONS ON DEMOGRAPHIC.HADM_ID = PRESCRIPTIONS.HADM_ID";
    const DJ_LAB: &str = "FROM DEMOGRAPHIC INNER JOIN LAB ON DEMOGRAPHIC.HADM_ID = LAB.HADM_ID";
    let d = |c: &'static str| ("DEMOGRAPHIC", c);
    let slot = |s: &'static str, (t, c): (&'static str, &'static str)| (s, t, c);
    vec![
        template("age_of", "What is the age of [NAME]?",
            r#"SELECT DEMOGRAPHIC.AGE FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]""#,
            &[slot("NAME", d("NAME"))]),
        template("language_count", "How many patients have language [LANG]?",
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = "[LANG]""#,
            &[slot("LANG", d("LANGUAGE"))]),
        template("gender_ethnicity", "How many patients of gender [GENDER] are of [ETH] ethnicity?",
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.GENDER = "[GENDER]" AND DEMOGRAPHIC.ETHNICITY = "[ETH]""#,
            &[slot("GENDER", d("GENDER")), slot("ETH", d("ETHNICITY"))]),
        template("religion_insurance_of", "What is the religion and insurance of [NAME]?",
            r#"SELECT DEMOGRAPHIC.RELIGION, DEMOGRAPHIC.INSURANCE FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]""#,
            &[slot("NAME", d("NAME"))]),
        template("admission_stay_of", "Give the admission type and days of stay for [NAME].",
            r#"SELECT DEMOGRAPHIC.ADMISSION_TYPE, DEMOGRAPHIC.DAYS_STAY FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]""#,
            &[slot("NAME", d("NAME"))]),
        template("avg_age_language_admission", "What is the average age of patients with language [LANG] and admission type [ADM]?",
            r#"SELECT AVG(DEMOGRAPHIC.AGE) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.LANGUAGE = "[LANG]" AND DEMOGRAPHIC.ADMISSION_TYPE = "[ADM]""#,
            &[slot("LANG", d("LANGUAGE")), slot("ADM", d("ADMISSION_TYPE"))]),
        template("insurance_diagnosis", "How many patients with [INS] insurance have diagnosis [DIAG]?",
            &format!(r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) {DJ_DIAG} WHERE DEMOGRAPHIC.INSURANCE = "[INS]" AND DIAGNOSES.SHORT_TITLE = "[DIAG]""#),
            &[slot("INS", d("INSURANCE")), slot("DIAG", ("DIAGNOSES", "SHORT_TITLE"))]),
        template("religion_procedure", "How many patients of religion [REL] underwent the procedure [PROC]?",
            &format!(r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) {DJ_PROC} WHERE DEMOGRAPHIC.RELIGION = "[REL]" AND PROCEDURES.SHORT_TITLE = "[PROC]""#),
            &[slot("REL", d("RELIGION")), slot("PROC", ("PROCEDURES", "SHORT_TITLE"))]),
        template("age_drug", "How many patients aged below [AGE] were prescribed [DRUG]?",
            &format!(r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) {DJ_PRES} WHERE DEMOGRAPHIC.AGE < "[AGE]" AND PRESCRIPTIONS.DRUG = "[DRUG]""#),
            &[slot("AGE", d("AGE")), slot("DRUG", ("PRESCRIPTIONS", "DRUG"))]),
        template("gender_lab", "How many patients of gender [GENDER] had a lab test for [LABEL]?",
            &format!(r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) {DJ_LAB} WHERE DEMOGRAPHIC.GENDER = "[GENDER]" AND LAB.LABEL = "[LABEL]""#),
            &[slot("GENDER", d("GENDER")), slot("LABEL", ("LAB", "LABEL"))]),
        template("procedure_short_title", "What is the short title of procedure code [CODE]?",
            r#"SELECT PROCEDURES.SHORT_TITLE FROM PROCEDURES WHERE PROCEDURES.ICD9_CODE = "[CODE]""#,
            &[slot("CODE", ("PROCEDURES", "ICD9_CODE"))]),
        template("procedure_long_title", "What is the long title of the procedure [PROC]?",
            r#"SELECT DISTINCT PROCEDURES.LONG_TITLE FROM PROCEDURES WHERE PROCEDURES.SHORT_TITLE = "[PROC]""#,
            &[slot("PROC", ("PROCEDURES", "SHORT_TITLE"))]),
        template("drug_route", "What is the route of administration for [DRUG]?",
            r#"SELECT DISTINCT PRESCRIPTIONS.ROUTE FROM PRESCRIPTIONS WHERE PRESCRIPTIONS.DRUG = "[DRUG]""#,
            &[slot("DRUG", ("PRESCRIPTIONS", "DRUG"))]),
        template("drug_route_count", "How many prescriptions of [DRUG] are given via [ROUTE]?",
            r#"SELECT COUNT(*) FROM PRESCRIPTIONS WHERE PRESCRIPTIONS.DRUG = "[DRUG]" AND PRESCRIPTIONS.ROUTE = "[ROUTE]""#,
            &[slot("DRUG", ("PRESCRIPTIONS", "DRUG")), slot("ROUTE", ("PRESCRIPTIONS", "ROUTE"))]),
        template("drug_code", "Show the formulary drug code of [DRUG].",
            r#"SELECT DISTINCT PRESCRIPTIONS.FORMULARY_DRUG_CD FROM PRESCRIPTIONS WHERE PRESCRIPTIONS.DRUG = "[DRUG]""#,
            &[slot("DRUG", ("PRESCRIPTIONS", "DRUG"))]),
        template("lab_fluid", "What is the fluid of the lab test [LABEL]?",
            r#"SELECT DISTINCT LAB.FLUID FROM LAB WHERE LAB.LABEL = "[LABEL]""#,
            &[slot("LABEL", ("LAB", "LABEL"))]),
        template("lab_flag_count", "How many lab tests of [LABEL] were flagged [FLAG]?",
            r#"SELECT COUNT(*) FROM LAB WHERE LAB.LABEL = "[LABEL]" AND LAB.FLAG = "[FLAG]""#,
            &[slot("LABEL", ("LAB", "LABEL")), slot("FLAG", ("LAB", "FLAG"))]),
        template("fluid_categories", "List the categories of lab tests on [FLUID] fluid.",
            r#"SELECT DISTINCT LAB.CATEGORY FROM LAB WHERE LAB.FLUID = "[FLUID]""#,
            &[slot("FLUID", ("LAB", "FLUID"))]),
        template("max_item", "What is the maximum item id of lab tests in category [CAT] with flag [FLAG]?",
            r#"SELECT MAX(LAB.ITEMID) FROM LAB WHERE LAB.CATEGORY = "[CAT]" AND LAB.FLAG = "[FLAG]""#,
            &[slot("CAT", ("LAB", "CATEGORY")), slot("FLAG", ("LAB", "FLAG"))]),
        template("diagnosis_code", "What is the ICD9 code of the diagnosis [DIAG]?",
            r#"SELECT DISTINCT DIAGNOSES.ICD9_CODE FROM DIAGNOSES WHERE DIAGNOSES.SHORT_TITLE = "[DIAG]""#,
            &[slot("DIAG", ("DIAGNOSES", "SHORT_TITLE"))]),
        template("diagnosis_long_title", "What is the long title for diagnosis code [ICD]?",
            r#"SELECT DISTINCT DIAGNOSES.LONG_TITLE FROM DIAGNOSES WHERE DIAGNOSES.ICD9_CODE = "[ICD]""#,
            &[slot("ICD", ("DIAGNOSES", "ICD9_CODE"))]),
        template("died_with", "How many patients with primary disease [PRIMARY] died?",
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.DIAGNOSIS = "[PRIMARY]" AND DEMOGRAPHIC.EXPIRE_FLAG = 1"#,
            &[slot("PRIMARY", d("DIAGNOSIS"))]),
        template("gender_language_of", "What is the gender and language of [NAME]?",
            r#"SELECT DEMOGRAPHIC.GENDER, DEMOGRAPHIC.LANGUAGE FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]""#,
            &[slot("NAME", d("NAME"))]),
        template("primary_stay_of", "What is the primary disease and days of stay of [NAME]?",
            r#"SELECT DEMOGRAPHIC.DIAGNOSIS, DEMOGRAPHIC.DAYS_STAY FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.NAME = "[NAME]""#,
            &[slot("NAME", d("NAME"))]),
        template("admission_long_stay", "How many patients with [ADM] admission stayed more than [DAYS] days?",
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.ADMISSION_TYPE = "[ADM]" AND DEMOGRAPHIC.DAYS_STAY > [DAYS]"#,
            &[slot("ADM", d("ADMISSION_TYPE")), slot("DAYS", d("DAYS_STAY"))]),
        template("ethnicity_insurance", "How many patients of [ETH] ethnicity have [INS] insurance?",
            r#"SELECT COUNT(DISTINCT DEMOGRAPHIC.SUBJECT_ID) FROM DEMOGRAPHIC WHERE DEMOGRAPHIC.ETHNICITY = "[ETH]" AND DEMOGRAPHIC.INSURANCE = "[INS]""#,
            &[slot("ETH", d("ETHNICITY")), slot("INS", d("INSURANCE"))]),
    ]
}

/// Instantiate the fixture templates and interleave them round-robin, so
/// any prefix of the result mixes every template. Returns at most `n`.
pub fn synthetic_corpus(lookup: &ValueLookup, n: usize) -> Result<Vec<Sample>, TemplateError> {
    let per_template: Vec<Vec<Sample>> = fixture_templates()
        .iter()
        .map(|t| instantiate_templates(std::slice::from_ref(t), lookup, 100))
        .collect::<Result<_, _>>()?;
    let mut iters: Vec<_> = per_template.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::new();
    while out.len() < n {
        let before = out.len();
        for it in &mut iters {
            if out.len() == n {
                break;
            }
            if let Some(s) = it.next() {
                out.push(s);
            }
        }
        if out.len() == before {
            break;
        }
    }
    Ok(out)
}

/// Paths of a fixture written to disk.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub dir: PathBuf,
    pub schema: PathBuf,
    pub tables: BTreeMap<String, PathBuf>,
    pub db: PathBuf,
    pub templates: PathBuf,
    pub corpus: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl From<crate::io::IoError> for FixtureError {
    fn from(e: crate::io::IoError) -> Self {
        FixtureError::Store(e.into())
    }
}

/// Write the schema, CSV tables, templates, a built database and a
/// `corpus_size`-sample corpus under `dir`.
pub fn write_fixture(dir: &Path, corpus_size: usize) -> Result<Fixture, FixtureError> {
    std::fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    let schema = fixture_schema();
    let schema_path = dir.join("schema.json");
    write_atomic(&schema_path, schema.to_json().as_bytes())?;
    let mut tables = BTreeMap::new();
    for (name, bytes) in fixture_tables() {
        let p = dir.join(format!("{}.csv", name.to_ascii_lowercase()));
        write_atomic(&p, &bytes)?;
        tables.insert(name, p);
    }
    let templates_path = dir.join("templates.json");
    let templates = serde_json::to_string_pretty(&fixture_templates()).expect("templates serialize") + "\n";
    write_atomic(&templates_path, templates.as_bytes())?;
    let db_path = dir.join("fixture.db");
    if db_path.exists() {
        std::fs::remove_file(&db_path).map_err(|e| StoreError::io(&db_path, e))?;
    }
    let db: ExecDb = build_exec_db(&schema, &tables, &db_path)?;
    let lookup = build_value_lookup(&db, &schema)?;
    let corpus = synthetic_corpus(&lookup, corpus_size)?;
    let corpus_path = dir.join("corpus.jsonl");
    save_corpus(&corpus_path, &corpus, None)?;
    Ok(Fixture { dir: dir.to_path_buf(), schema: schema_path, tables, db: db_path, templates: templates_path, corpus: corpus_path })
}
