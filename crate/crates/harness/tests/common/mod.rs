#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Label, article title, and five criteria per label.
pub const CRITERIA: &[(&str, &str, [&str; 5])] = &[
    ("atrial fibrillation", "Atrial Fibrillation", [
        "Irregularly irregular rhythm with no discernible pattern to the RR intervals",
        "No distinct P waves; fibrillatory baseline waves may be seen best in V1",
        "Ventricular rate usually 110 to 160 bpm when untreated",
        "Narrow QRS complexes unless there is aberrant conduction",
        "Variable coarse or fine fibrillation amplitude in the inferior leads",
    ]),
    ("atrial flutter", "Atrial Flutter", [
        "Sawtooth flutter waves at about 300 per minute in leads II, III and aVF",
        "Regular ventricular response with 2:1 block giving a rate near 150 bpm",
        "No isoelectric baseline between flutter waves",
        "Flutter waves may mimic ST depression or hide within the T wave",
        "Positive flutter waves in V1 in typical counterclockwise circuits",
    ]),
    ("sinus rhythm", "Normal Sinus Rhythm", [
        "Regular rhythm with a rate between 60 and 100 bpm",
        "Each QRS complex is preceded by an upright P wave in lead II",
        "Constant PR interval between 120 and 200 ms",
        "P wave morphology is identical from beat to beat",
        "P wave inverted in aVR as expected for sinus node origin",
    ]),
    ("sinus bradycardia", "Sinus Bradycardia", [
        "Sinus rhythm with a resting rate below 60 bpm",
        "Normal P wave axis with a P wave before every QRS",
        "Long RR intervals with preserved atrioventricular conduction",
        "Common in athletes and during sleep",
        "Marked slowing below 40 bpm may cause hypotension",
    ]),
    ("sinus tachycardia", "Sinus Tachycardia", [
        "Sinus rhythm with a rate above 100 bpm",
        "P waves may merge into the preceding T wave at fast rates",
        "Gradual onset and offset rather than an abrupt start",
        "Usually a physiological response to fever, pain or hypovolemia",
        "Rate rarely exceeds 220 minus age",
    ]),
    ("sinus arrhythmia", "Sinus Arrhythmia", [
        "Sinus P waves with phasic variation of the PP interval",
        "Rate varies with respiration, speeding on inspiration",
        "Difference between longest and shortest PP interval exceeds 120 ms",
        "Normal finding in children and young adults",
        "P wave morphology stays constant despite the varying rate",
    ]),
    ("supraventricular tachycardia", "Supraventricular Tachycardia", [
        "Regular narrow complex tachycardia at 150 to 250 bpm",
        "Retrograde P waves buried in or just after the QRS",
        "Pseudo R prime in V1 or pseudo S waves in the inferior leads",
        "Abrupt onset and termination of the paroxysm",
        "Rate related ST depression may be present",
    ]),
    ("first degree av block", "First Degree AV Block", [
        "PR interval longer than 200 ms",
        "Every P wave is followed by a QRS complex",
        "Constant prolonged PR interval without dropped beats",
        "Marked first degree block may exceed 300 ms",
        "P wave may be hidden in the preceding T wave when the PR is very long",
    ]),
    ("complete left bundle branch block", "Left Bundle Branch Block", [
        "QRS duration of at least 120 ms",
        "Dominant S wave in V1 with a broad monophasic R wave in V6, I and aVL",
        "Absence of Q waves in the lateral leads",
        "Appropriate discordance with ST segments opposite the main QRS deflection",
        "Notched or M shaped R wave in lateral leads",
    ]),
    ("complete right bundle branch block", "Right Bundle Branch Block", [
        "Broad QRS longer than 120 ms",
        "RSR prime pattern in V1 described as an M shape",
        "Wide slurred S wave in the lateral leads I and V6",
        "T wave inversion in V1 to V3 as a secondary change",
        "Normal initial septal activation preserves small Q waves in V6",
    ]),
    ("left anterior fascicular block", "Left Anterior Fascicular Block", [
        "Left axis deviation between minus 45 and minus 90 degrees",
        "Small Q waves with tall R waves in I and aVL (qR pattern)",
        "Small R waves with deep S waves in II, III and aVF (rS pattern)",
        "QRS duration only mildly prolonged, under 120 ms",
        "Prolonged R wave peak time in aVL",
    ]),
    ("left posterior fascicular block", "Left Posterior Fascicular Block", [
        "Right axis deviation beyond plus 90 degrees",
        "rS complexes in leads I and aVL",
        "qR complexes in the inferior leads II, III and aVF",
        "Exclusion of right ventricular hypertrophy and lateral infarction",
        "Slight QRS widening below 120 ms",
    ]),
    ("left ventricular hypertrophy", "Left Ventricular Hypertrophy", [
        "Sokolow Lyon index: S in V1 plus R in V5 or V6 above 35 mm",
        "R wave in aVL taller than 11 mm",
        "Strain pattern of ST depression and T inversion in lateral leads",
        "Left atrial enlargement frequently coexists",
        "Increased R wave peak time over 50 ms in V5 and V6",
    ]),
    ("long qt-interval", "Long QT Interval", [
        "Corrected QT above 450 ms in men or 460 ms in women",
        "QTc above 500 ms carries a high risk of torsades de pointes",
        "Broad based or notched T waves with late onset",
        "QT measured from QRS onset to the end of the T wave in lead II or V5",
        "Drug induced prolongation from antiarrhythmics and macrolides",
    ]),
    ("right atrial overload/enlargement", "Right Atrial Enlargement", [
        "Peaked P wave taller than 2.5 mm in the inferior leads",
        "P pulmonale pattern in lead II",
        "Prominent initial positive P deflection in V1 above 1.5 mm",
        "P wave duration remains normal",
        "Associated with pulmonary hypertension and tricuspid disease",
    ]),
    ("left atrial overload/enlargement", "Left Atrial Enlargement", [
        "Bifid P wave with notch separation over 40 ms in lead II",
        "P wave duration longer than 110 ms, known as P mitrale",
        "Deep terminal negative P deflection in V1 over 40 ms wide",
        "Commonly seen with mitral stenosis",
        "Predisposes to atrial fibrillation",
    ]),
    ("ventricular premature complex", "Premature Ventricular Complex", [
        "Broad abnormal QRS arriving earlier than the next expected sinus beat",
        "No preceding P wave before the premature complex",
        "Full compensatory pause after the ectopic beat",
        "Discordant ST and T wave opposite the QRS of the ectopic",
        "Bigeminy when every other beat is ventricular ectopic",
    ]),
    ("atrial premature complex", "Premature Atrial Complex", [
        "Early abnormal P wave with a different morphology from sinus P waves",
        "Narrow QRS following the premature P wave",
        "Non compensatory pause because the sinus node is reset",
        "Blocked premature P waves may deform the preceding T wave",
        "Short coupling interval to the preceding sinus beat",
    ]),
    ("st segment elevation (stemi) myocardial infarction", "ST Elevation Myocardial Infarction", [
        "New ST elevation at the J point in two contiguous leads",
        "Elevation of at least 1 mm in limb leads or 2 mm in V2 and V3",
        "Reciprocal ST depression in the opposite leads",
        "Hyperacute T waves early in the course",
        "Pathological Q waves develop over hours",
    ]),
    ("myocardial infarction in inferior leads", "Inferior Myocardial Infarction", [
        "Pathological Q waves in II, III and aVF",
        "ST elevation in the inferior leads with reciprocal change in aVL",
        "ST elevation in III greater than in II suggests right coronary occlusion",
        "Check right sided lead V4R for right ventricular involvement",
        "Bradycardia and AV block are frequent companions",
    ]),
    ("low qrs voltages in the frontal and horizontal leads", "Low QRS Voltage", [
        "QRS amplitude below 5 mm in every limb lead",
        "QRS amplitude below 10 mm in every precordial lead",
        "Seen with pericardial effusion, obesity and emphysema",
        "Electrical alternans may accompany a large effusion",
        "Infiltrative cardiomyopathy reduces voltage despite thick walls",
    ]),
    ("normal functioning artificial pacemaker", "Paced Rhythm", [
        "Sharp pacing spikes immediately before captured complexes",
        "Ventricular pacing produces a broad QRS with a left bundle morphology",
        "Atrial pacing spike precedes each P wave",
        "Capture follows every spike at the programmed rate",
        "Appropriate sensing inhibits pacing during intrinsic beats",
    ]),
];

pub const SOURCES: [&str; 3] = ["litfl", "wikipedia", "ecgpedia"];

/// Write one article per (label, source) with four of the five criteria.
/// Returns the label map (label → relative files).
pub fn write_corpus(root: &Path) -> BTreeMap<String, Vec<PathBuf>> {
    let mut map: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for (li, (label, title, crit)) in CRITERIA.iter().enumerate() {
        for (si, src) in SOURCES.iter().enumerate() {
            let rel = PathBuf::from(src).join(format!("{li:02}_{}.md", title.to_lowercase().replace(' ', "_")));
            let path = root.join(&rel);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            let mut md = format!("# {title}\n\nOverview of {title} from {src}.\n\n## Diagnostic criteria\n\n");
            for (ci, c) in crit.iter().enumerate() {
                if ci != (si + li) % 5 {
                    md.push_str(&format!("- {c}\n"));
                }
            }
            md.push_str("\n## Management\n\nTreat the underlying cause and monitor.\n");
            std::fs::write(&path, md).unwrap();
            map.entry(label.to_string()).or_default().push(rel);
        }
    }
    map
}

pub fn write_label_map(path: &Path, map: &BTreeMap<String, Vec<PathBuf>>) {
    std::fs::write(path, serde_json::to_string_pretty(map).unwrap()).unwrap();
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_reasoneval"))
}

pub mod mock {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::{Arc, Mutex};
    use std::thread;
    use std::time::Duration;

    #[derive(Debug, Clone)]
    pub struct Canned {
        pub status: u16,
        pub body: String,
        pub delay: Duration,
    }

    impl Canned {
        pub fn ok(body: &str) -> Self {
            Self { status: 200, body: body.to_string(), delay: Duration::ZERO }
        }

        pub fn status(status: u16) -> Self {
            Self { status, body: "{}".into(), delay: Duration::ZERO }
        }

        pub fn slow(body: &str, delay: Duration) -> Self {
            Self { status: 200, body: body.to_string(), delay }
        }
    }

    /// Serves canned responses in order; the last one repeats.
    pub struct MockServer {
        pub url: String,
        pub requests: Arc<Mutex<Vec<String>>>,
    }

    fn read_request(stream: &mut TcpStream) -> Option<String> {
        let mut reader = BufReader::new(stream.try_clone().ok()?);
        let mut len = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).ok()? == 0 {
                return None;
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().ok()?;
                }
            }
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body).ok()?;
        String::from_utf8(body).ok()
    }

    impl MockServer {
        pub fn start(responses: Vec<Canned>) -> Self {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let url = format!("http://{}/v1", listener.local_addr().unwrap());
            let requests = Arc::new(Mutex::new(Vec::new()));
            let log = Arc::clone(&requests);
            thread::spawn(move || {
                for (i, stream) in listener.incoming().enumerate() {
                    let Ok(mut stream) = stream else { continue };
                    let Some(body) = read_request(&mut stream) else { continue };
                    log.lock().unwrap().push(body);
                    let r = responses[i.min(responses.len() - 1)].clone();
                    thread::spawn(move || {
                        thread::sleep(r.delay);
                        let reason = if r.status < 300 { "OK" } else { "Error" };
                        let msg = format!(
                            "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                            r.status,
                            r.body.len(),
                            r.body
                        );
                        let _ = stream.write_all(msg.as_bytes());
                        let _ = stream.flush();
                    });
                }
            });
            Self { url, requests }
        }

        pub fn hits(&self) -> usize {
            self.requests.lock().unwrap().len()
        }
    }
}
