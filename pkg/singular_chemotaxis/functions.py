import math


###############################################################################
#  HELPER FUNCTIONS
###############################################################################
#

# Count result types "ok"/"nok"/"exception" and sum the elapsed time of
# the "ok" points.
def calc_average(results):
    total_ok = 0.0
    count_ok = 0
    count_wrong = 0
    count_exc = 0
    for r in results:
        _index, res, _row, el = r
        if res == 'ok':
            total_ok += el
            count_ok += 1
        elif res == 'nok':
            count_wrong += 1
        elif res == 'exception':
            count_exc += 1

    return count_ok, total_ok, count_wrong, count_exc


# Generator for 1,2,5,10,20,... sequence
def np_gen(max_p):
    n = 1
    m = 1
    while n <= max_p:
        for s in [1, 2, 5]:
            np = s*m
            if np < max_p:
                yield np
            else:
                yield max_p
                return
        m *= 10


# Function to replace any of the characters in the string s with the character c
def replace_chars(s, c, chars):
    for ch in chars:
        s = s.replace(ch, c)
    return s


# NaN and +-inf are not valid JSON; write them as null.
def jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, 'item'):
        return jsonable(obj.item())
    return obj
