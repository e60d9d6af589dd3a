def compare_lists(list1, list2, tol: float = 0.0):
    if len(list1) != len(list2):
        return False
    for item1, item2 in zip(list1, list2):
        if tol == 0.0:
            if item1 != item2:
                return False
        elif abs(item1 - item2) > tol:
            return False
    return True

