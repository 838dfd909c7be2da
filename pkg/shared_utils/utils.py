import os
import json
import logging

logger = logging.getLogger(__name__)

# =================================================================
#                 Paths and budgets
# =================================================================

try:
    PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
except NameError:
    PROJECT_ROOT = os.path.dirname(os.getcwd())

SHARED_ASSETS_PATH = os.path.join(PROJECT_ROOT, "shared_assets")
SETTINGS_FILE_PATH = os.path.join(SHARED_ASSETS_PATH, "settings.json")
PROGRAMS_PATH = os.path.join(SHARED_ASSETS_PATH, "programs")

# every setting is a positive integer budget
DEFAULT_SETTINGS = {
    "step_budget": 1_000_000,
    "fixpoint_budget": 100_000,
    "enumeration_limit": 100_000_000,
    "sweep_workers": 4,
}

LOG_FORMAT = '%(levelname)s: %(message)s'

# budgets in effect, filled by load_settings()
settings = {}

# =================================================================
#                 Console
# =================================================================

def print_header(title):
    print("=" * 60)
    print(f"{title:^60}")
    print("=" * 60)

def print_summary(title, rows, ok=True):
    """Print a banner with `label: value` rows and a closing status line."""
    print_header(title)
    width = max((len(label) for label, _ in rows), default=0) + 2
    for label, value in rows:
        print(f"  {label + ':':<{width}} {value}")
    print("-" * 60)
    print("✅ Done." if ok else "❌ Finished with problems (see above).")
    print("=" * 60)

def show_usage(module_path):
    """Print the README of a package, or of the project for an empty path."""
    readme = os.path.join(PROJECT_ROOT, module_path, 'README.md')
    if not os.path.isfile(readme):
        print(f"ℹ️  No usage page for '{module_path or 'resdist'}'.")
        return False
    with open(readme, 'r', encoding='utf-8') as f:
        print(f.read())
    return True

def setup_logging(verbose=False):
    """Configure the root logger once: INFO by default, DEBUG when verbose."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)

# =================================================================
#                 settings.json
# =================================================================

def _budget(key, value):
    """`value` as a positive int budget for `key`; ValueError otherwise."""
    if key not in DEFAULT_SETTINGS:
        raise ValueError(f"unknown setting '{key}' (known: {', '.join(DEFAULT_SETTINGS)})")
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"setting '{key}' must be a positive integer, got {value!r}")
    return int(value)

def load_settings():
    """Budgets from settings.json; missing or invalid entries fall back to the defaults."""
    global settings
    stored = {}
    if os.path.exists(SETTINGS_FILE_PATH):
        try:
            with open(SETTINGS_FILE_PATH, 'r', encoding='utf-8') as f:
                stored = json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            logger.warning("Ignoring %s: %s", SETTINGS_FILE_PATH, e)
    settings = dict(DEFAULT_SETTINGS)
    for key, value in stored.items():
        try:
            settings[key] = _budget(key, value)
        except (TypeError, ValueError) as e:
            logger.warning("settings.json: %s", e)
    return settings

def update_setting(key, value):
    settings[key] = _budget(key, value)

def save_settings():
    try:
        os.makedirs(SHARED_ASSETS_PATH, exist_ok=True)
        with open(SETTINGS_FILE_PATH, 'w', encoding='utf-8') as f:
            json.dump(settings, f, indent=4)
        return True
    except OSError as e:
        print(f"\n❌ Could not write {SETTINGS_FILE_PATH}: {e}")
        return False
